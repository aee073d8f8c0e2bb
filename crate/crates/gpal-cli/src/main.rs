use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gpal_cli::commands::{cmd_compare, cmd_design, cmd_run, CompareArgs, DesignArgs, RunArgs};

/// Active-learning benchmark harness for Gaussian-process models under
/// input and measurement uncertainty.
#[derive(Parser)]
#[command(name = "gpal", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a maximin Latin hypercube design as CSV.
    Design {
        /// Number of points.
        #[arg(long)]
        n: usize,
        /// Input dimension.
        #[arg(long)]
        q: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Lower bound, every dimension.
        #[arg(long, default_value_t = -450.0, allow_hyphen_values = true)]
        lo: f64,
        /// Upper bound, every dimension.
        #[arg(long, default_value_t = 450.0)]
        hi: f64,
        /// Local-search budget.
        #[arg(long, default_value_t = 2000)]
        sweeps: usize,
        /// Output CSV path.
        #[arg(long, short, default_value = "design.csv")]
        out: PathBuf,
    },
    /// Run one or more strategies end to end and write curves, models,
    /// the oracle, and a replayable manifest.
    Run {
        /// JSON run configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Replay a previous run from its manifest.
        #[arg(long)]
        from_manifest: Option<PathBuf>,
        /// Output directory (overrides the config value).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Master seed (overrides the config value).
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated strategy tags (overrides the config value).
        #[arg(long, value_delimiter = ',')]
        strategies: Option<Vec<String>>,
        /// Query budget beyond the initial design.
        #[arg(long)]
        n_iter: Option<usize>,
        /// Mean-MAD stopping threshold.
        #[arg(long, allow_hyphen_values = true)]
        threshold: Option<f64>,
    },
    /// Join learning-curve CSVs on sample count into per-metric tables.
    Compare {
        /// Two or more curve CSVs.
        #[arg(required = true)]
        curves: Vec<PathBuf>,
        /// Directory for mean_mad.csv, max_mad.csv, cv_mse.csv.
        #[arg(long, short, default_value = "compare-out")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Design {
            n,
            q,
            seed,
            lo,
            hi,
            sweeps,
            out,
        } => cmd_design(&DesignArgs {
            n,
            q,
            seed,
            lo,
            hi,
            sweeps,
            out,
        }),
        Command::Run {
            config,
            from_manifest,
            out_dir,
            seed,
            strategies,
            n_iter,
            threshold,
        } => cmd_run(&RunArgs {
            config,
            from_manifest,
            out_dir,
            seed,
            strategies,
            n_iter,
            threshold,
        }),
        Command::Compare { curves, out_dir } => cmd_compare(&CompareArgs { curves, out_dir }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gpal: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
