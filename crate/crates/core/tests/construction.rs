use qfsurf_core::construction::*;
use qfsurf_core::io;
use qfsurf_core::kleinian::Side;
use qfsurf_core::{BuildError, Point};
use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

fn config(n: usize) -> Configuration {
    build_configuration(&default_spec(n).unwrap()).unwrap()
}

fn n1() -> &'static (Configuration, ConstructionCertificate) {
    static CELL: OnceLock<(Configuration, ConstructionCertificate)> = OnceLock::new();
    CELL.get_or_init(|| run_pipeline(&default_spec(1).unwrap()).unwrap())
}

fn failing(cert: &ConstructionCertificate) -> BTreeSet<String> {
    cert.criteria.iter().filter(|(_, c)| !c.pass).map(|(k, _)| k.clone()).collect()
}

fn only(name: &str) -> BTreeSet<String> {
    [name.to_string()].into_iter().collect()
}

// --- combinatorics -------------------------------------------------------

#[test]
fn counts_for_n_up_to_five() {
    for n in 1..=5 {
        let cfg = config(n);
        assert_eq!(cfg.stations.len(), 3 * n - 1, "n = {n}");
        let circles: usize = cfg.stations.iter().map(|s| s.circles.len()).sum();
        assert_eq!(circles, 6 * n - 2);
        assert_eq!(cfg.curve.bridges.len(), 2 * n - 1);
        let arrs = enumerate_arrangements(n, &cfg.stations);
        assert_eq!(arrs.len(), 1 << n);
        assert!(arrs.iter().all(|a| a.stations.len() == 2 * n - 1));
        let labels: BTreeSet<String> = arrs.iter().map(|a| a.label()).collect();
        assert_eq!(labels.len(), 1 << n);
    }
}

#[test]
fn arrangements_pick_one_of_b_or_c_per_band_and_every_prime_bridge() {
    let cfg = config(3);
    for a in enumerate_arrangements(3, &cfg.stations) {
        let kinds: Vec<StationKind> = a.stations.iter().map(|&s| cfg.stations[s].kind).collect();
        for i in 1..=3 {
            let b = kinds.contains(&StationKind::Bridge(i));
            let c = kinds.contains(&StationKind::CirclePair(i));
            assert!(b ^ c, "{} band {i}", a.label());
            assert_eq!(b, a.choice[i - 1] == Choice::B);
        }
        assert!(kinds.contains(&StationKind::PrimeBridge(1)) && kinds.contains(&StationKind::PrimeBridge(2)));
    }
}

#[test]
fn parallel_heights_for_three_bands() {
    let pairs = build_parallel_circles(3, 0.02).unwrap();
    let mut heights = vec![];
    for p in &pairs {
        // Upper disk is the cap above, lower disk the cap below.
        assert!(p.upper.disk_contains(Point::e3()));
        assert!(p.lower.disk_contains(-Point::e3()));
        heights.push(p.upper.normal.z * p.upper.offset);
        heights.push(p.lower.normal.z * p.lower.offset);
    }
    let want = [0.52, 0.48, 0.02, -0.02, -0.48, -0.52];
    for (h, w) in heights.iter().zip(want) {
        assert!((h - w).abs() < 1e-12, "{heights:?}");
    }
    let all: Vec<_> = pairs.iter().flat_map(|p| [p.upper, p.lower]).collect();
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            assert!(circle_gap(&all[i], &all[j]) > 0.0);
        }
    }
}

#[test]
fn oversized_epsilon_collides() {
    assert!(matches!(build_parallel_circles(3, 0.4), Err(BuildError::CollidingPairs(1, 2))));
    let mut spec = default_spec(3).unwrap();
    spec.epsilon = 0.4;
    assert!(matches!(build_configuration(&spec), Err(BuildError::CollidingPairs(1, 2))));
}

#[test]
fn jordan_curve_is_simple_with_corners_at_bridges() {
    for n in 1..=3 {
        let cfg = config(n);
        let line = &cfg.curve.polyline;
        assert!(line.self_intersection().is_none());
        assert_eq!(cfg.curve.corners.len(), 4 * (2 * n - 1));
        assert!(cfg.curve.corners.windows(2).all(|w| w[0] < w[1]));
        assert!(*cfg.curve.corners.last().unwrap() < line.len());
    }
}

#[test]
fn stations_are_off_the_curve_and_below_threshold() {
    let solver = default_solver().unwrap();
    let thr = dl_threshold(&solver);
    let cfg = config(2);
    for s in &cfg.stations {
        assert!(s.dl().unwrap() <= thr, "{}", s.kind.label());
        for c in &s.circles {
            for p in c.sample(64) {
                assert!(cfg.curve.polyline.distance_to(p) > 0.0);
            }
        }
    }
}

#[test]
fn smaller_offset_gives_smaller_distance() {
    let spec = default_spec(2).unwrap();
    let solver = default_solver().unwrap();
    let thr = dl_threshold(&solver);
    let curve = build_jordan_curve(&spec).unwrap();
    let mut prev: Option<Vec<f64>> = None;
    for k in 0..4 {
        let s = ConstructionSpec { catenoid_offset: spec.catenoid_offset / (1 << k) as f64, ..spec.clone() };
        let dls: Vec<f64> =
            place_catenoid_circles(&s, &curve, thr).unwrap().iter().map(|st| st.dl().unwrap()).collect();
        if let Some(p) = &prev {
            for (a, b) in dls.iter().zip(p) {
                assert!(a < b, "offset /{}: {a} !< {b}", 1 << k);
            }
        }
        prev = Some(dls);
    }
}

// --- linking numbers --------------------------------------------------------

fn circle_loop(center: Point, u: Point, v: Point, r: f64, n: usize) -> Vec<Point> {
    (0..n)
        .map(|k| {
            let t = TAU * k as f64 / n as f64;
            center + u * (r * t.cos()) + v * (r * t.sin())
        })
        .collect()
}

/// Curve winding `q` times around the core circle of a torus with radii 2 and 1.
fn torus_curve(q: f64, n: usize) -> Vec<Point> {
    (0..n)
        .map(|k| {
            let t = TAU * k as f64 / n as f64;
            let w = 2.0 + (q * t).cos();
            Point::new(w * t.cos(), w * t.sin(), (q * t).sin())
        })
        .collect()
}

/// Midpoint-rule Gauss double integral on polygon edges.
fn gauss_integral(a: &[Point], b: &[Point]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        let (a0, a1) = (a[i], a[(i + 1) % a.len()]);
        for j in 0..b.len() {
            let (b0, b1) = (b[j], b[(j + 1) % b.len()]);
            let r = (a0 + a1) * 0.5 - (b0 + b1) * 0.5;
            s += (a1 - a0).cross(b1 - b0).dot(r) / r.norm().powi(3);
        }
    }
    s / (4.0 * PI)
}

#[test]
fn hopf_pair_links_once() {
    let a = circle_loop(Point::zero(), Point::e1(), Point::e2(), 1.0, 200);
    let b = circle_loop(Point::e1(), Point::e1(), Point::e3(), 1.0, 200);
    let l = linking_number(&a, &b).unwrap();
    assert_eq!(l.value.abs(), 1);
    assert!((l.raw - l.value as f64).abs() < 1e-9);
    let rev: Vec<Point> = b.iter().rev().copied().collect();
    assert_eq!(linking_number(&a, &rev).unwrap().value, -l.value);
}

#[test]
fn distant_loops_are_unlinked() {
    let a = circle_loop(Point::zero(), Point::e1(), Point::e2(), 1.0, 100);
    let b = circle_loop(Point::new(5.0, 0.0, 0.0), Point::e1(), Point::e3(), 1.0, 100);
    assert_eq!(linking_number(&a, &b).unwrap().value, 0);
}

#[test]
fn exact_linking_matches_quadrature_oracle() {
    let core = circle_loop(Point::zero(), Point::e1(), Point::e2(), 2.0, 300);
    for q in [1.0, 2.0, 3.0] {
        let c = torus_curve(q, 600);
        let exact = linking_number(&core, &c).unwrap();
        let oracle = gauss_integral(&core, &c);
        assert_eq!(exact.value.abs(), q as i64);
        assert!((exact.raw - oracle).abs() < 5e-3, "q = {q}: {} vs {oracle}", exact.raw);
    }
}

#[test]
fn touching_loops_are_rejected() {
    let a = circle_loop(Point::zero(), Point::e1(), Point::e2(), 1.0, 100);
    let b = circle_loop(Point::new(2.0, 0.0, 0.0), Point::e1(), Point::e2(), 1.0, 100);
    assert!(matches!(linking_number(&a, &b), Err(LinkingError::TooClose(_))));
}

// --- certificates --------------------------------------------------------

#[test]
fn one_band_certificate_is_valid() {
    let (_, cert) = n1();
    assert!(cert.valid, "{:?}", failing(cert));
    assert_eq!(cert.status, "VALID");
    assert_eq!(cert.distinctness.band_linking, vec![Some(1)]);
    for s in &cert.stations {
        assert!(s.same_side && s.dl_ok && s.residual_ok);
        assert_eq!(s.separation_violations, 0);
        assert_eq!(s.separation_samples, SEPARATION_SAMPLES);
    }
}

#[test]
fn arrangement_with_both_choices_of_a_band_is_linked() {
    let (cfg, _) = n1();
    let solver = default_solver().unwrap();
    let mut v = Verifier::new(cfg, &solver).unwrap();
    let b = cfg.station(StationKind::Bridge(1)).unwrap();
    let c = cfg.station(StationKind::CirclePair(1)).unwrap();
    assert_ne!(v.records[b].sides[0], v.records[c].sides[0]);
    let bad = Arrangement { index: 0, choice: vec![Choice::B], stations: vec![b, c] };
    let rec = v.verify_arrangement(&bad);
    assert!(!rec.unlinked);
    assert_eq!(rec.linked_pairs.len(), 1);
    assert!(!rec.pass);
}

#[test]
fn three_band_certificate() {
    let (cfg, cert) = run_pipeline(&default_spec(3).unwrap()).unwrap();
    assert!(cert.valid, "{:?}", failing(&cert));
    assert_eq!(cfg.stations.len(), 8);
    let cbb = cert.arrangements.iter().find(|a| a.label == "CBB").unwrap();
    assert!(cbb.pass && cbb.unlinked && cbb.witness_hits == 0);
    assert_eq!(cbb.stations.len(), 5);
    assert_eq!(cert.distinctness.pairs, 28);
    assert_eq!(cert.distinctness.witnessed, 28);
    assert!(cert.distinctness.band_opposite.iter().all(|&o| o));
    assert!(cert.stations.iter().all(|s| s.separation_violations == 0));
    // B and C stations of one band sit on opposite sides.
    for i in 1..=3 {
        let side = |k: StationKind| cert.stations.iter().find(|s| s.kind == k).unwrap().sides[0];
        assert_ne!(side(StationKind::Bridge(i)), side(StationKind::CirclePair(i)));
        assert_ne!(side(StationKind::Bridge(i)), Side::Covered);
    }
}

#[test]
fn build_is_deterministic_across_thread_counts() {
    let spec = default_spec(2).unwrap();
    let a = io::to_string(&build_configuration(&spec).unwrap()).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| io::to_string(&build_configuration(&spec).unwrap()).unwrap());
    assert_eq!(a, b);
}

#[test]
fn configuration_round_trips_through_json() {
    let (cfg, cert) = n1();
    let s = io::to_string(cfg).unwrap();
    let back: Configuration = io::from_str(&s).unwrap();
    assert_eq!(&back, cfg);
    let c = io::to_string(cert).unwrap();
    let back: ConstructionCertificate = io::from_str(&c).unwrap();
    assert_eq!(&back, cert);
}

// --- negative controls ---------------------------------------------------

#[test]
fn perturbed_orthogonality_fails_only_that_check() {
    let (cfg, _) = n1();
    let mut v: serde_json::Value = serde_json::from_str(&io::to_string(cfg).unwrap()).unwrap();
    let r = &mut v["chain"]["radii"][5];
    *r = serde_json::Value::from(r.as_f64().unwrap() * (1.0 + 1e-6));
    let bad: Configuration = io::from_str(&v.to_string()).unwrap();
    let cert = verify_configuration(&bad).unwrap();
    assert!(!cert.valid);
    assert_eq!(failing(&cert), only("chain_orthogonality"));
}

#[test]
fn oversized_epsilon_fails_only_parallel_circles() {
    let mut cfg = config(2);
    cfg.spec.epsilon = 0.4;
    let cert = verify_configuration(&cfg).unwrap();
    assert_eq!(failing(&cert), only("parallel_circles"));
}

#[test]
fn reflected_circle_fails_only_same_side() {
    let (cfg, _) = n1();
    let mut bad = cfg.clone();
    let b = bad.station(StationKind::Bridge(1)).unwrap();
    let pairs = build_parallel_circles(1, bad.spec.epsilon).unwrap();
    let mirror = qfsurf_core::circle::inversion_in_circle(&pairs[0].upper).unwrap();
    let c0 = bad.stations[b].circles[0];
    bad.stations[b].circles[1] = c0.transform(&mirror).unwrap();
    let cert = verify_configuration(&bad).unwrap();
    let rec = cert.stations.iter().find(|s| s.kind == StationKind::Bridge(1)).unwrap();
    assert!(!rec.same_side);
    assert_eq!(failing(&cert), only("same_side"));
    assert_eq!(cert.distinctness.witnessed, 0);
    assert_eq!(cert.distinctness.unevaluable, 1);
}

