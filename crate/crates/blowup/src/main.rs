use blowup::cli::{run, CliArgs};
use clap::Parser;
use std::path::PathBuf;

/// Blow-up certification and simulation for semilinear heat equations
/// driven by mixed local-nonlocal diffusion.
#[derive(Parser)]
#[command(name = "blowup", version, about)]
struct Args {
    /// Run configuration (JSON; strict schema, command selected inside)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's output_dir)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Seed for randomized sampling probes (overrides the config's seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Print progress and summaries to stderr
    #[arg(long)]
    verbose: bool,
}

fn main() {
    let args = Args::parse();
    let code = run(&CliArgs {
        config: args.config,
        output: args.output,
        seed: args.seed,
        verbose: args.verbose,
    });
    std::process::exit(code);
}
