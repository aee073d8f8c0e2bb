//! Drives full comparisons: build (or load) the oracle, derive the pools,
//! run every requested strategy, and write the deterministic outputs plus
//! the manifest. Strategies run on their own threads; their random
//! streams are independent by construction, so concurrency cannot change
//! any result.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gpal_core::{
    run_loop_with_model, seed::child_seed, standard_pools, Clock, CvConfig, FitConfig,
    FittedModel, LearningCurve, LoopConfig, ModelSpec, ModelVariant, Oracle, OracleSpec, Pools,
    Strategy,
};

use crate::config::RunConfig;
use crate::formats::{save_curve_csv, save_model, save_oracle, strategy_filename};
use crate::manifest::{config_sha256, Diagnostics, Manifest, Outputs};
use crate::{CliError, CliResult};

/// Wall clock backed by `Instant`.
pub struct SystemClock(Instant);

impl SystemClock {
    pub fn new() -> Self {
        Self(Instant::now())
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now_ms(&mut self) -> u64 {
        self.0.elapsed().as_millis() as u64
    }
}

pub struct RunArtifacts {
    pub manifest_path: PathBuf,
    pub curves: Vec<LearningCurve>,
}

fn build_oracle(config: &RunConfig) -> CliResult<(Oracle, OracleSpec)> {
    let spec = match &config.oracle.path {
        Some(path) => crate::formats::load_oracle(Path::new(path))?,
        None => OracleSpec::synthesize(&config.oracle_config()?)
            .map_err(|e| CliError::runtime(format!("oracle synthesis failed: {e}")))?,
    };
    let oracle = Oracle::new(spec.clone())
        .map_err(|e| CliError::runtime(format!("oracle factorization failed: {e}")))?;
    Ok((oracle, spec))
}

fn build_model_spec(config: &RunConfig, oracle: &Oracle) -> CliResult<ModelSpec> {
    let variant = config.variant()?;
    let q = oracle.spec().q;
    let p = oracle.spec().p;
    let weights = config.weights_for(p)?;
    // the actuator tolerance is known engineering input: the model is
    // handed the oracle's true input-noise covariance
    let sigma_f = match variant {
        ModelVariant::SurrogateWithUncertainties => oracle.spec().sigma_f_star.clone(),
        ModelVariant::StochasticKriging => nalgebra::DMatrix::zeros(q, q),
    };
    let spec = ModelSpec::new(variant, q, p, sigma_f, weights)
        .map_err(|e| CliError::config(e.to_string()))?;
    Ok(if config.isotropic {
        spec.isotropic()
    } else {
        spec
    })
}

pub fn loop_config(config: &RunConfig, spec: ModelSpec) -> LoopConfig {
    LoopConfig {
        spec,
        fit: FitConfig {
            restarts: config.fit.restarts,
            max_evals: config.fit.max_evals,
            ..FitConfig::default()
        },
        cv: CvConfig {
            restarts: config.cv.restarts,
            refit: config.cv.refit,
            max_evals: 0,
        },
        n_iter: config.n_iter,
        threshold: config.threshold.unwrap_or(f64::INFINITY),
        patience: config.patience,
        master_seed: config.master_seed,
        static_doe_sweeps: config.lhd_sweeps,
    }
}

/// Execute the comparison described by `config`, writing everything under
/// `config.out_dir`.
pub fn execute(config: &RunConfig) -> CliResult<RunArtifacts> {
    config.validate()?;
    let strategies = config.strategies()?;
    let out_dir = PathBuf::from(&config.out_dir);
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", out_dir.display())))?;

    let (oracle, oracle_spec) = build_oracle(config)?;
    let model_spec = build_model_spec(config, &oracle)?;
    let pools = standard_pools(
        &oracle,
        config.master_seed,
        config.initial_size,
        config.pool_size,
        config.eval_size,
        config.lhd_sweeps,
    )
    .map_err(|e| CliError::runtime(format!("pool construction failed: {e}")))?;
    let cfg = loop_config(config, model_spec);

    let oracle_path = out_dir.join("oracle.json");
    save_oracle(&oracle_spec, &oracle_path)?;

    // one thread per strategy; streams are disjoint so results match the
    // serial order regardless of scheduling
    type StrategyResult = (Strategy, LearningCurve, Option<FittedModel>, u64);
    let mut results: Vec<StrategyResult> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for &strategy in &strategies {
            let cfg = &cfg;
            let oracle = &oracle;
            let pools: &Pools = &pools;
            handles.push((
                strategy,
                scope.spawn(move || {
                    let started = Instant::now();
                    let mut clock = SystemClock::new();
                    let (curve, model) =
                        run_loop_with_model(cfg, strategy, oracle, pools, &mut clock);
                    (curve, model, started.elapsed().as_millis() as u64)
                }),
            ));
        }
        for (strategy, handle) in handles {
            let (curve, model, elapsed) = handle.join().expect("strategy thread panicked");
            results.push((strategy, curve, model, elapsed));
        }
    });

    let mut outputs = Outputs {
        oracle: "oracle.json".into(),
        ..Outputs::default()
    };
    let mut strategy_errors = BTreeMap::new();
    let mut diagnostics = Diagnostics {
        created_unix_ms: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0),
        ..Diagnostics::default()
    };

    let mut curves = Vec::new();
    for (strategy, curve, model, elapsed) in results {
        let tag = strategy.tag().to_string();
        let curve_name = strategy_filename(strategy);
        save_curve_csv(&curve, &out_dir.join(&curve_name))?;
        outputs.curves.insert(tag.clone(), curve_name);
        if let Some(err) = &curve.error {
            strategy_errors.insert(tag.clone(), err.clone());
        }
        if let Some(model) = model {
            let model_name = format!("model_{}.json", strategy.tag());
            save_model(&model, &out_dir.join(&model_name))?;
            outputs.models.insert(tag.clone(), model_name);
        }
        diagnostics.wall_ms.insert(tag.clone(), elapsed);
        diagnostics
            .clamped_observations
            .insert(tag, curve.clamped_observations);
        curves.push(curve);
    }

    let manifest = Manifest {
        tool: "gpal".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        config_sha256: config_sha256(config)?,
        seeds: seed_table(config),
        outputs,
        strategy_errors,
        diagnostics,
    };
    let manifest_path = out_dir.join("manifest.json");
    manifest.save(&manifest_path)?;
    Ok(RunArtifacts {
        manifest_path,
        curves,
    })
}

fn seed_table(config: &RunConfig) -> BTreeMap<String, u64> {
    let mut seeds = BTreeMap::new();
    let master = config.master_seed;
    seeds.insert("master".into(), master);
    seeds.insert("oracle".into(), child_seed(master, "oracle"));
    seeds.insert("design-initial".into(), child_seed(master, "design-initial"));
    seeds.insert("design-pool".into(), child_seed(master, "design-pool"));
    seeds.insert("design-eval".into(), child_seed(master, "design-eval"));
    seeds.insert("observe-initial".into(), child_seed(master, "observe-initial"));
    for s in Strategy::ALL {
        seeds.insert(
            format!("observe/{}", s.tag()),
            child_seed(master, &format!("observe/{}", s.tag())),
        );
        seeds.insert(
            format!("fit/{}", s.tag()),
            child_seed(master, &format!("fit/{}", s.tag())),
        );
    }
    seeds
}
