//! Check every hypothesis of a configuration and write a certificate.
//!
//! Exit status: 0 when the certificate is VALID, 2 when INVALID, 1 on error.

use anyhow::{Context, Result};
use clap::Parser;
use qfsurf_core::construction::verify_configuration;
use qfsurf_core::io;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(about = "Verify a configuration and emit a certificate")]
struct Cli {
    config: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    let cfg = io::read_config(&cli.config).with_context(|| format!("reading {}", cli.config.display()))?;
    let cert = verify_configuration(&cfg)?;
    io::write(&cli.output, &cert).with_context(|| format!("writing {}", cli.output.display()))?;
    for (name, c) in &cert.criteria {
        eprintln!("{} {name}: {}", if c.pass { "ok  " } else { "FAIL" }, c.detail);
    }
    eprintln!("{}", cert.status);
    Ok(cert.valid)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
