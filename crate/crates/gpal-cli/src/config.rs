//! Run configuration: a single JSON document, with command-line flags
//! overriding file values. The effective configuration is echoed into the
//! manifest so a run is fully replayable from it.

use gpal_core::{Bounds, CvConfig, FitConfig, ModelSpec, ModelVariant, OracleConfig, Strategy};
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub master_seed: u64,
    /// "kriging" or "surrogate".
    pub variant: String,
    /// Single shared length-scale instead of one per input dimension.
    pub isotropic: bool,
    pub bounds: BoundsConfig,
    pub oracle: OracleSection,
    pub initial_size: usize,
    pub pool_size: usize,
    pub eval_size: usize,
    pub n_iter: usize,
    /// Mean-MAD stopping threshold; omit (null) to run to the budget.
    pub threshold: Option<f64>,
    pub patience: usize,
    /// Output weights; omitted means uniform. Normalized (with a warning)
    /// when the sum drifts from one.
    pub weights: Option<Vec<f64>>,
    pub strategies: Vec<String>,
    pub out_dir: String,
    pub lhd_sweeps: usize,
    pub fit: FitSection,
    pub cv: CvSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            variant: "surrogate".into(),
            isotropic: true,
            bounds: BoundsConfig::default(),
            oracle: OracleSection::default(),
            initial_size: 11,
            pool_size: 200,
            eval_size: 200,
            n_iter: 30,
            threshold: None,
            patience: 3,
            weights: None,
            strategies: Strategy::ALL.iter().map(|s| s.tag().to_string()).collect(),
            out_dir: "gpal-runs".into(),
            lhd_sweeps: 2000,
            fit: FitSection::default(),
            cv: CvSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsConfig {
    pub lo: f64,
    pub hi: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            lo: -450.0,
            hi: 450.0,
        }
    }
}

/// Either synthesize an oracle from these knobs or load a frozen one.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    /// Path to a serialized oracle spec; when set, the synthesis knobs
    /// below are ignored.
    pub path: Option<String>,
    pub q: usize,
    pub p: usize,
    pub n_anchors: usize,
    pub anchor_sweeps: usize,
    pub tau_star2: f64,
    pub theta_star: f64,
    pub linear_std: f64,
    pub sigma_f_scale: f64,
    pub noise_frac: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        let c = OracleConfig::new(0);
        Self {
            path: None,
            q: c.q,
            p: c.p,
            n_anchors: c.n_anchors,
            anchor_sweeps: c.anchor_sweeps,
            tau_star2: c.tau_star2,
            theta_star: c.theta_star,
            linear_std: c.linear_std,
            sigma_f_scale: c.sigma_f_scale,
            noise_frac: c.noise_frac,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub restarts: usize,
    /// 0 lets the optimizer pick its budget from the dimension.
    pub max_evals: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        let f = FitConfig::default();
        Self {
            restarts: f.restarts,
            max_evals: f.max_evals,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CvSection {
    pub restarts: usize,
    pub refit: bool,
}

impl Default for CvSection {
    fn default() -> Self {
        // warm-start-only per-fold refits (within the library's two-restart
        // cap); the full-restart refit stays one config line away
        Self {
            restarts: 1,
            refit: true,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("cannot parse {}: {e}", path.display())))
    }

    pub fn variant(&self) -> CliResult<ModelVariant> {
        match self.variant.as_str() {
            "kriging" => Ok(ModelVariant::StochasticKriging),
            "surrogate" => Ok(ModelVariant::SurrogateWithUncertainties),
            other => Err(CliError::config(format!(
                "unknown variant {other:?}; expected \"kriging\" or \"surrogate\""
            ))),
        }
    }

    pub fn strategies(&self) -> CliResult<Vec<Strategy>> {
        if self.strategies.is_empty() {
            return Err(CliError::config("strategies must not be empty"));
        }
        self.strategies
            .iter()
            .map(|s| {
                s.parse()
                    .map_err(|_| CliError::config(format!("unknown strategy {s:?}")))
            })
            .collect()
    }

    pub fn bounds(&self, q: usize) -> CliResult<Bounds> {
        Bounds::uniform(q, self.bounds.lo, self.bounds.hi)
            .map_err(|e| CliError::config(e.to_string()))
    }

    pub fn oracle_config(&self) -> CliResult<OracleConfig> {
        let q = self.oracle.q;
        Ok(OracleConfig {
            q,
            p: self.oracle.p,
            bounds: self.bounds(q)?,
            n_anchors: self.oracle.n_anchors,
            anchor_sweeps: self.oracle.anchor_sweeps,
            tau_star2: self.oracle.tau_star2,
            theta_star: self.oracle.theta_star,
            linear_std: self.oracle.linear_std,
            sigma_f_scale: self.oracle.sigma_f_scale,
            noise_frac: self.oracle.noise_frac,
            seed: gpal_core::seed::child_seed(self.master_seed, "oracle"),
        })
    }

    /// Validate sizes and produce the normalized weight vector, warning on
    /// stderr when normalization was needed.
    pub fn weights_for(&self, p: usize) -> CliResult<Vec<f64>> {
        match &self.weights {
            None => Ok(ModelSpec::uniform_weights(p)),
            Some(w) => {
                if w.len() != p {
                    return Err(CliError::config(format!(
                        "weights length {} does not match p = {p}",
                        w.len()
                    )));
                }
                if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(CliError::config("weights must be finite and nonnegative"));
                }
                let sum: f64 = w.iter().sum();
                if sum <= 0.0 {
                    return Err(CliError::config("weights must not sum to zero"));
                }
                if (sum - 1.0).abs() > 1e-9 {
                    eprintln!("warning: weights sum to {sum}; normalizing to one");
                }
                Ok(w.iter().map(|x| x / sum).collect())
            }
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        for (name, v) in [
            ("initial_size", self.initial_size),
            ("pool_size", self.pool_size),
            ("eval_size", self.eval_size),
            ("patience", self.patience),
            ("oracle.q", self.oracle.q),
            ("oracle.p", self.oracle.p),
            ("fit.restarts", self.fit.restarts),
        ] {
            if v == 0 {
                return Err(CliError::config(format!("{name} must be >= 1")));
            }
        }
        if self.eval_size < 2 {
            return Err(CliError::config("eval_size must be >= 2"));
        }
        if self.bounds.lo >= self.bounds.hi {
            return Err(CliError::config("bounds.lo must be < bounds.hi"));
        }
        if let Some(t) = self.threshold {
            if !t.is_finite() {
                return Err(CliError::config("threshold must be finite or omitted"));
            }
        }
        self.variant()?;
        self.strategies()?;
        Ok(())
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            restarts: self.fit.restarts,
            max_evals: self.fit.max_evals,
            ..FitConfig::default()
        }
    }

    pub fn cv_config(&self) -> CvConfig {
        CvConfig {
            restarts: self.cv.restarts,
            refit: self.cv.refit,
            max_evals: 0,
        }
    }
}
