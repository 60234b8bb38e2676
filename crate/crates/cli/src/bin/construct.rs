//! Build a configuration: parallel circles, bridges, curve, stations and chain.

use anyhow::{Context, Result};
use clap::Parser;
use qfsurf_core::construction::{build_configuration, default_spec, search_spec, ConstructionSpec};
use qfsurf_core::io;
use std::path::PathBuf;

#[derive(Parser)]
#[command(about = "Construct a configuration for N bands")]
struct Cli {
    /// Start from a spec file instead of the built-in defaults.
    #[arg(long, conflicts_with = "n")]
    spec: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    bridge_width: Option<f64>,
    #[arg(long)]
    catenoid_offset: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    prune_tol: Option<f64>,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Shrink epsilon, bridge width and offset until the configuration verifies
    /// (at most this many attempts).
    #[arg(long)]
    search: Option<usize>,
    #[arg(short, long)]
    output: PathBuf,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut spec: ConstructionSpec = match &cli.spec {
        Some(p) => io::read_spec(p).with_context(|| format!("reading {}", p.display()))?,
        None => default_spec(cli.n.unwrap_or(3))?,
    };
    if let Some(n) = cli.n {
        spec.n = n;
    }
    spec.epsilon = cli.epsilon.unwrap_or(spec.epsilon);
    spec.bridge_width = cli.bridge_width.unwrap_or(spec.bridge_width);
    spec.catenoid_offset = cli.catenoid_offset.unwrap_or(spec.catenoid_offset);
    spec.delta = cli.delta.unwrap_or(spec.delta);
    spec.prune_tol = cli.prune_tol.unwrap_or(spec.prune_tol);
    spec.max_depth = cli.max_depth.unwrap_or(spec.max_depth);
    spec.validate()?;
    if let Some(attempts) = cli.search {
        let (found, used) = search_spec(&spec, attempts)?;
        eprintln!("spec verified after {used} attempt(s)");
        spec = found;
    }
    let cfg = build_configuration(&spec)?;
    io::write(&cli.output, &cfg).with_context(|| format!("writing {}", cli.output.display()))?;
    eprintln!(
        "N = {}: {} stations, {} chain circles, curve with {} vertices",
        spec.n,
        cfg.stations.len(),
        cfg.chain.len(),
        cfg.curve.polyline.len()
    );
    Ok(())
}
