//! Regenerate `fixtures/default_specs.json` by shrinking a coarse start spec
//! until the pipeline certifies it.

use qfsurf_core::construction::{search_spec, ConstructionSpec};

fn main() {
    let max_n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let mut specs = vec![];
    for n in 1..=max_n {
        let start = ConstructionSpec {
            n,
            epsilon: 0.04,
            bridge_width: 0.002,
            catenoid_offset: 0.002,
            delta: 0.05,
            prune_tol: 1e-3,
            max_depth: 40,
        };
        let (spec, attempts) = search_spec(&start, 20).expect("search failed");
        eprintln!("n = {n}: valid after {attempts} attempts");
        specs.push(spec);
    }
    let doc = serde_json::json!({ "version": 1, "specs": specs });
    println!("{}", serde_json::to_string_pretty(&doc).unwrap());
}
