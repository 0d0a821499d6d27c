use std::path::PathBuf;
use std::process::ExitCode;

use aif_cli::{run, RunOptions, Stage};
use clap::Parser;

/// Builds a search-volume investment activity index from a config file.
#[derive(Debug, Parser)]
#[command(name = "aif", version)]
struct Args {
    /// Pipeline stage to run.
    stage: Stage,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's rng_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("AIF_LOG", "info")).format_timestamp(None).init();
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let _ = e.print();
            // clap would exit 2, which is reserved for missing dependencies
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    let opts = RunOptions { config: args.config, seed: args.seed, out: args.out };
    match run(args.stage, &opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("aif {}: {e}", args.stage);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
