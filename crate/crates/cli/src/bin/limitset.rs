//! Limit set of the inversion group of a configuration's covering chain.

use anyhow::{Context, Result};
use clap::Parser;
use qfsurf_core::io;
use qfsurf_core::kleinian::{limit_set, InversionGroup};
use std::path::PathBuf;

#[derive(Parser)]
#[command(about = "Enumerate the limit set as a point cloud")]
struct Cli {
    /// Configuration JSON written by `construct`.
    config: PathBuf,
    #[arg(long, default_value_t = 1e-4)]
    prune_tol: f64,
    #[arg(long, default_value_t = 40)]
    max_depth: usize,
    #[arg(short, long)]
    output: PathBuf,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    anyhow::ensure!(cli.prune_tol > 0.0, "--prune-tol must be positive");
    let cfg = io::read_config(&cli.config).with_context(|| format!("reading {}", cli.config.display()))?;
    let group = InversionGroup::new(cfg.chain)?;
    let cloud = limit_set(&group, cli.prune_tol, cli.max_depth);
    if let Some(w) = cloud.warning() {
        eprintln!("warning: {w}");
    }
    io::write(&cli.output, &cloud).with_context(|| format!("writing {}", cli.output.display()))?;
    eprintln!("{} points, depth {}", cloud.points.len(), cloud.depth);
    Ok(())
}
