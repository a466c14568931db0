use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use oseenlab::config::{parse_config, parse_n_list, RunConfig};
use oseenlab::pipeline::{execute, Command, EXIT_FAILURE};

/// Steady compressible Oseen flow with slip boundary conditions: Galerkin
/// solves, Helmholtz splitting, density regularity and verification checks.
#[derive(Parser)]
#[command(name = "oseenlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Classify the boundary flatness at the singularity points.
    Classify(Opts),
    /// Lift the boundary data and solve the Galerkin system.
    Solve(Opts),
    /// Solve, then split the velocity into potential and stream parts.
    Decompose(Opts),
    /// Solve, then run the transport and density-regularity analysis.
    Regularity(Opts),
    /// Solve, then run the inequality and residual checks.
    Verify(Opts),
    /// Convergence study over the configured list of basis sizes.
    Study(Opts),
    /// Full pipeline: classify, solve, decompose, regularity, verify.
    Run(Opts),
}

#[derive(Args)]
struct Opts {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `run.out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized checks, overriding `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated basis sizes, overriding `run.n`.
    #[arg(long)]
    n_override: Option<String>,
}

fn load(opts: &Opts) -> Result<RunConfig> {
    let text = std::fs::read_to_string(&opts.config)
        .with_context(|| format!("cannot read config {}", opts.config.display()))?;
    let mut cfg = parse_config(&text).with_context(|| format!("in {}", opts.config.display()))?;
    if let Some(out) = &opts.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(list) = &opts.n_override {
        cfg.ns = parse_n_list(list)?;
    }
    Ok(cfg)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("OSEENLAB_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("OSEENLAB_THREADS: not a count: {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, opts) = match &cli.command {
        Sub::Classify(o) => (Command::Classify, o),
        Sub::Solve(o) => (Command::Solve, o),
        Sub::Decompose(o) => (Command::Decompose, o),
        Sub::Regularity(o) => (Command::Regularity, o),
        Sub::Verify(o) => (Command::Verify, o),
        Sub::Study(o) => (Command::Study, o),
        Sub::Run(o) => (Command::Run, o),
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_FAILURE as u8);
    }
    let cfg = match load(opts) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            // The summary is written even when the configuration is unusable.
            if let Some(out) = &opts.out {
                let _ = std::fs::create_dir_all(out);
                let _ = std::fs::write(
                    out.join("summary.txt"),
                    format!("command: {}\nerror: {e:#}\nstatus: error\nexit_code: {EXIT_FAILURE}\n", cmd.name()),
                );
            }
            return ExitCode::from(EXIT_FAILURE as u8);
        }
    };
    let outcome = execute(cmd, &cfg);
    print!("{}", outcome.summary.render());
    for c in &outcome.checks {
        println!("{c}");
    }
    ExitCode::from(outcome.exit_code as u8)
}
