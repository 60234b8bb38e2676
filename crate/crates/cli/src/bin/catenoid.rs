//! Catenoid generating curves and the distance thresholds.

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use qfsurf_core::catenoid::{
    mean_curvature_residual, solve_generating_curve, thresholds, CatenoidSolver, CurveParams, GeneratingCurve,
};
use serde_json::{json, Value};
use std::path::PathBuf;

#[derive(Parser)]
#[command(about = "Catenoids in hyperbolic 3-space")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Write JSON here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Output grid spacing of the ODE solver.
    #[arg(long, global = true, default_value_t = CurveParams::default().step)]
    step: f64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generating curve for a given neck parameter.
    Solve {
        #[arg(long)]
        neck: f64,
    },
    /// All catenoids whose boundary planes are a given distance apart.
    ForDistance {
        #[arg(long = "dL")]
        dl: f64,
    },
    /// The existence threshold d0 and the least-area threshold d1.
    Thresholds {
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

fn curve_json(c: &GeneratingCurve) -> Result<Value> {
    let residual = mean_curvature_residual(c)?;
    Ok(json!({
        "a": c.neck_parameter,
        "dL": c.plane_separation,
        "samples": c.samples,
        "residual": residual,
    }))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let params = CurveParams { step: cli.step, ..CurveParams::default() };
    let out = match cli.cmd {
        Cmd::Solve { neck } => curve_json(&solve_generating_curve(neck, &params)?)?,
        Cmd::ForDistance { dl } => {
            let solver = CatenoidSolver::new(params, 1e-8)?;
            let sols = solver.for_distance(dl)?;
            Value::Array(sols.iter().map(|s| curve_json(&s.curve)).collect::<Result<_>>()?)
        }
        Cmd::Thresholds { tol } => serde_json::to_value(thresholds(tol, &params)?)?,
    };
    let text = serde_json::to_string_pretty(&out)? + "\n";
    match cli.output {
        Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}
