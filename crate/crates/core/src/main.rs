use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use rydberg_eit::cli::{parse_config, run};

/// Rydberg EIT sweep simulator and spectrum fitter.
#[derive(Parser, Debug)]
#[command(name = "eit-sim", version)]
struct Args {
    /// Run configuration (`key = value` lines).
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the summary on stdout.
    #[arg(long)]
    quiet: bool,
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("EIT_SIM_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().with_context(|| format!("threads: EIT_SIM_THREADS=`{v}` is not a count"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("threads: cannot configure the worker pool")
}

fn main_inner(args: Args) -> Result<()> {
    configure_threads()?;
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("config: cannot read {}", args.config.display()))?;
    let mut config = parse_config(&text).with_context(|| format!("config {}", args.config.display()))?;
    if let Some(dir) = args.output_dir {
        config.output_dir = dir;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let outcome = run(&config)?;
    if !args.quiet {
        print!("{}", outcome.summary);
        for f in &outcome.files {
            println!("wrote {}", f.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eit-sim: {e:#}");
            ExitCode::FAILURE
        }
    }
}
