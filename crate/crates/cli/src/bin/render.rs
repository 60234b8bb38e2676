//! SVG views of configurations and limit-set clouds.

use anyhow::{bail, Context, Result};
use clap::Parser;
use qfsurf_core::io;
use qfsurf_core::render::{cloud_scene, configuration_scene, render_svg, ConfigView, Projection};
use qfsurf_core::Point;
use std::path::PathBuf;

#[derive(Parser)]
#[command(about = "Render a configuration or a limit-set cloud as SVG")]
struct Cli {
    /// Configuration JSON.
    config: Option<PathBuf>,
    /// Render a point cloud written by `limitset` instead.
    #[arg(long, conflicts_with = "config")]
    cloud: Option<PathBuf>,
    #[arg(long)]
    certificate: Option<PathBuf>,
    /// Highlight the stations of arrangement k (0 <= k < 2^N).
    #[arg(long)]
    arrangement: Option<usize>,
    /// Also draw the covering chain.
    #[arg(long)]
    chain: bool,
    /// Projection pole as x,y,z (normalised); defaults to the north pole.
    #[arg(long, value_name = "X,Y,Z", value_delimiter = ',')]
    pole: Option<Vec<f64>>,
    #[arg(long, default_value_t = 400.0)]
    scale: f64,
    #[arg(short, long)]
    output: PathBuf,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut projection = Projection { scale: cli.scale, ..Projection::default() };
    if let Some(p) = &cli.pole {
        anyhow::ensure!(p.len() == 3, "--pole takes three comma-separated numbers");
        let v = Point::new(p[0], p[1], p[2]);
        anyhow::ensure!(v.norm() > 0.0, "--pole must be non-zero");
        projection.pole = v.normalized();
    }
    let scene = match (&cli.config, &cli.cloud) {
        (Some(path), None) => {
            let cfg = io::read_config(path).with_context(|| format!("reading {}", path.display()))?;
            let cert = match &cli.certificate {
                Some(p) => Some(io::read_certificate(p).with_context(|| format!("reading {}", p.display()))?),
                None => None,
            };
            let view = ConfigView { certificate: cert.as_ref(), arrangement: cli.arrangement, show_chain: cli.chain, projection };
            configuration_scene(&cfg, &view)?
        }
        (None, Some(path)) => {
            let cloud = io::read_cloud(path).with_context(|| format!("reading {}", path.display()))?;
            cloud_scene(&cloud, projection)
        }
        _ => bail!("give either a configuration file or --cloud"),
    };
    let svg = render_svg(&scene)?;
    std::fs::write(&cli.output, svg).with_context(|| format!("writing {}", cli.output.display()))?;
    Ok(())
}
