use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stefan_lab::config::RunConfig;
use stefan_lab::harness;

#[derive(Parser)]
#[command(
    name = "stefan-lab",
    version,
    about = "Simulation laboratory for the 1-d stochastic Stefan problem (fixed-domain form)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (flat key = value with [section] headers);
    /// defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the configured base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for artifacts; reports go to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one path with the configured solver.
    Single {
        #[command(flatten)]
        common: CommonArgs,
        /// Path dump format when `paths` is among the configured outputs.
        #[arg(long, value_parser = ["csv", "bin"], default_value = "csv")]
        path_format: String,
    },
    /// Solve an ensemble and aggregate statistics.
    Ensemble(CommonArgs),
    /// Derivative-field diagnostics: scaling slopes, positivity, bump check.
    Malliavin(CommonArgs),
    /// Two half-problems, moving-boundary reconstruction, physical density.
    Front(CommonArgs),
    /// Verify the heat-kernel bounds and identities.
    VerifyKernel {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, stefan_lab::Error> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::parse(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    Ok(cfg)
}

fn setup_threads(threads: usize) {
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn run() -> Result<bool, stefan_lab::Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Single {
            common: args,
            path_format,
        } => {
            setup_threads(args.threads);
            let cfg = load_config(&args)?;
            let format = if path_format == "bin" {
                harness::PathDumpFormat::Binary
            } else {
                harness::PathDumpFormat::Csv
            };
            let rep = harness::run_single_with_format(&cfg, args.out.as_deref(), format)?;
            println!("{}", serde_json::to_string_pretty(&rep).unwrap());
            Ok(rep.passed)
        }
        Command::Ensemble(args) => {
            setup_threads(args.threads);
            let cfg = load_config(&args)?;
            let rep = harness::run_ensemble(&cfg, args.out.as_deref())?;
            print!("{}", rep.text_table());
            Ok(rep.passed)
        }
        Command::Malliavin(args) => {
            setup_threads(args.threads);
            let cfg = load_config(&args)?;
            let rep = harness::run_malliavin(&cfg, args.out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&rep).unwrap());
            Ok(rep.passed)
        }
        Command::Front(args) => {
            setup_threads(args.threads);
            let cfg = load_config(&args)?;
            let rep = harness::run_front(&cfg, args.out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&rep).unwrap());
            Ok(rep.passed)
        }
        Command::VerifyKernel {
            alpha,
            lambda,
            out,
            threads,
        } => {
            setup_threads(threads);
            let rep = harness::run_verify_kernel(alpha, lambda, out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&rep).unwrap());
            Ok(rep.passed)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more configured checks failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
