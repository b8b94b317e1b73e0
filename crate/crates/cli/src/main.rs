use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use uavlos_cli::{run_command, Verb};
use uavlos_core::config::parse_config;

/// LOS blockage experiments for UAV links over synthetic urban patches.
#[derive(Debug, Parser)]
#[command(name = "uavlos", version)]
struct Args {
    verb: Verb,
    /// `key = value` configuration file; omitted keys take their defaults.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Overrides `out_dir` from the configuration.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn run(args: Args) -> Result<()> {
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?,
        None => String::new(),
    };
    let mut config = parse_config(&text).with_context(|| match &args.config {
        Some(p) => format!("in {}", p.display()),
        None => "in default configuration".to_string(),
    })?;
    if let Some(dir) = args.out_dir {
        config.out_dir = dir;
    }
    for path in run_command(args.verb, &config)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("uavlos: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
