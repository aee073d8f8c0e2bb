//! Implementations behind the three subcommands.

use std::path::{Path, PathBuf};

use gpal_core::{design, Bounds, LhdConfig};

use crate::config::RunConfig;
use crate::formats::{load_curve_csv, save_design_csv, write_metric_tables};
use crate::manifest::Manifest;
use crate::runner::execute;
use crate::{CliError, CliResult};

pub struct DesignArgs {
    pub n: usize,
    pub q: usize,
    pub seed: u64,
    pub lo: f64,
    pub hi: f64,
    pub sweeps: usize,
    pub out: PathBuf,
}

/// Generate a maximin Latin hypercube design, write it as CSV, and print
/// its minimum pairwise distance.
pub fn cmd_design(args: &DesignArgs) -> CliResult<()> {
    if args.n == 0 || args.q == 0 {
        return Err(CliError::config("need n >= 1 and q >= 1"));
    }
    if args.lo >= args.hi {
        return Err(CliError::config("--lo must be < --hi"));
    }
    let bounds =
        Bounds::uniform(args.q, args.lo, args.hi).map_err(|e| CliError::config(e.to_string()))?;
    let d = design::maximin_lhd(&LhdConfig {
        n: args.n,
        q: args.q,
        bounds,
        seed: args.seed,
        sweeps: args.sweeps,
    });
    save_design_csv(&d, &args.out)?;
    let min_dist = design::min_pairwise_distance(&d);
    println!(
        "wrote {} ({} x {}), min pairwise distance {:.6}",
        args.out.display(),
        args.n,
        args.q,
        min_dist
    );
    Ok(())
}

pub struct RunArgs {
    pub config: Option<PathBuf>,
    pub from_manifest: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub strategies: Option<Vec<String>>,
    pub n_iter: Option<usize>,
    pub threshold: Option<f64>,
}

/// Run the comparison described by a config file (or replay a manifest),
/// with flags overriding file values.
pub fn cmd_run(args: &RunArgs) -> CliResult<()> {
    let mut config = match (&args.config, &args.from_manifest) {
        (Some(_), Some(_)) => {
            return Err(CliError::config(
                "pass either --config or --from-manifest, not both",
            ))
        }
        (Some(path), None) => RunConfig::from_file(path)?,
        (None, Some(path)) => Manifest::load(path)?.config,
        (None, None) => RunConfig::default(),
    };
    if let Some(dir) = &args.out_dir {
        config.out_dir = dir.display().to_string();
    }
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(strategies) = &args.strategies {
        config.strategies = strategies.clone();
    }
    if let Some(n_iter) = args.n_iter {
        config.n_iter = n_iter;
    }
    if let Some(threshold) = args.threshold {
        config.threshold = Some(threshold);
    }

    let artifacts = execute(&config)?;
    for curve in &artifacts.curves {
        match (&curve.error, curve.rows.last()) {
            (Some(err), _) => eprintln!(
                "{}: failed after {} iterations: {err}",
                curve.strategy,
                curve.rows.len()
            ),
            (None, Some(last)) => println!(
                "{}: {} samples, mean_mad {:.6}, max_mad {:.6}, cv_mse {:.6}, stop {}",
                curve.strategy,
                last.n_samples,
                last.mean_mad,
                last.max_mad,
                last.cv_mse,
                last.stop.map_or("-", |s| s.tag()),
            ),
            (None, None) => eprintln!("{}: produced no rows", curve.strategy),
        }
    }
    println!("manifest: {}", artifacts.manifest_path.display());
    Ok(())
}

pub struct CompareArgs {
    pub curves: Vec<PathBuf>,
    pub out_dir: PathBuf,
}

/// Join learning curves on their sample counts and emit one tidy CSV per
/// metric.
pub fn cmd_compare(args: &CompareArgs) -> CliResult<()> {
    if args.curves.len() < 2 {
        return Err(CliError::config("compare needs at least two curve CSVs"));
    }
    let mut loaded = Vec::new();
    for path in &args.curves {
        loaded.push((path.clone(), load_curve_csv(path)?));
    }
    let written = write_metric_tables(&loaded, Path::new(&args.out_dir))?;
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}
