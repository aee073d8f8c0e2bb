//! Evaluation scores: mean/max of per-output mean absolute deviations over
//! the evaluation pool, and leave-one-out cross-validation MSE over the
//! current training set.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gp::{FitConfig, FittedModel};
use crate::oracle::Oracle;
use crate::seed::child_seed;
use crate::types::{Dataset, DesignMatrix, ForcePoint, ModelSpec};

/// Fixed evaluation points with their noise-free oracle responses.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPool {
    points: DesignMatrix,
    truth: DMatrix<f64>,
}

impl EvalPool {
    pub fn new(points: DesignMatrix, truth: DMatrix<f64>) -> Result<Self> {
        if points.k() < 2 {
            return Err(Error::InvalidConfig("evaluation pool needs at least two points"));
        }
        if truth.nrows() != points.k() {
            return Err(Error::DimensionMismatch {
                context: "evaluation truth rows",
                expected: points.k(),
                got: truth.nrows(),
            });
        }
        Ok(Self { points, truth })
    }

    pub fn from_oracle(oracle: &Oracle, points: DesignMatrix) -> Result<Self> {
        let truth = oracle.truth_matrix(&points)?;
        Self::new(points, truth)
    }

    pub fn points(&self) -> &DesignMatrix {
        &self.points
    }

    pub fn truth(&self) -> &DMatrix<f64> {
        &self.truth
    }

    pub fn len(&self) -> usize {
        self.points.k()
    }

    pub fn is_empty(&self) -> bool {
        self.points.k() == 0
    }
}

/// Per-output mean absolute deviation over the pool (fixed summation order).
pub fn per_output_mad(model: &FittedModel, pool: &EvalPool) -> Result<DVector<f64>> {
    let p = model.spec().p;
    if pool.truth.ncols() != p {
        return Err(Error::DimensionMismatch {
            context: "evaluation truth outputs",
            expected: p,
            got: pool.truth.ncols(),
        });
    }
    let n = pool.len();
    let mut sums = DVector::zeros(p);
    for i in 0..n {
        let pred = model.predict(pool.points.row(i))?;
        for j in 0..p {
            sums[j] += (pred[j] - pool.truth[(i, j)]).abs();
        }
    }
    Ok(sums / n as f64)
}

/// Mean over outputs of the per-output MAD.
pub fn mean_mad(model: &FittedModel, pool: &EvalPool) -> Result<f64> {
    let mads = per_output_mad(model, pool)?;
    Ok(mads.sum() / mads.len() as f64)
}

/// Max over outputs of the per-output MAD.
pub fn max_mad(model: &FittedModel, pool: &EvalPool) -> Result<f64> {
    Ok(per_output_mad(model, pool)?.max())
}

/// Settings for the leave-one-out refits.
#[derive(Debug, Clone)]
pub struct CvConfig {
    /// Optimizer restarts per fold (warm start included); kept small for
    /// tractability, raise for a full-restart refit.
    pub restarts: usize,
    /// When false, folds reuse the reference model's hyperparameters and
    /// only re-estimate the linear coefficients.
    pub refit: bool,
    /// Simplex evaluation budget per fold start; 0 picks a small default
    /// suited to warm-started refits.
    pub max_evals: usize,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            restarts: 2,
            refit: true,
            max_evals: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub mse: f64,
    pub attempted: usize,
    pub failed: usize,
}

/// Leave-one-out cross-validation MSE. Fold `i` refits on the dataset
/// without point `i` (hyperparameters re-estimated per fold unless
/// `cv.refit` is off) and is scored against the oracle truth at `F_i`:
/// the mean over folds of `mean_j (Yhat_j - Y*_j)^2`. Failed folds are
/// excluded and reported.
pub fn cv_mse<T>(
    d: &Dataset,
    spec: &ModelSpec,
    fit_cfg: &FitConfig,
    cv: &CvConfig,
    reference: Option<&FittedModel>,
    mut truth: T,
) -> Result<CvReport>
where
    T: FnMut(&ForcePoint) -> Result<DVector<f64>>,
{
    let k = d.k();
    if k < 2 {
        return Err(Error::InvalidConfig("cross-validation needs at least two points"));
    }
    if !cv.refit && reference.is_none() {
        return Err(Error::InvalidConfig(
            "cv without refits needs a reference model for hyperparameters",
        ));
    }
    let warm_starts: Vec<Vec<f64>> = reference
        .map(|m| (0..spec.p).map(|j| m.log_params(j)).collect())
        .unwrap_or_default();

    let mut sum = 0.0;
    let mut failed = 0usize;
    for i in 0..k {
        let fold = d.without_point(i)?;
        let model = if cv.refit {
            let cfg = FitConfig {
                seed: child_seed(fit_cfg.seed, "cv-fold").wrapping_add(i as u64),
                restarts: cv.restarts,
                warm_starts: warm_starts.clone(),
                max_evals: if cv.max_evals == 0 { 120 } else { cv.max_evals },
                ..fit_cfg.clone()
            };
            FittedModel::fit(spec, &fold, &cfg)
        } else {
            let reference = reference.expect("checked above");
            let hps = (0..spec.p)
                .map(|j| reference.output(j).hp().clone())
                .collect();
            FittedModel::with_hyperparameters(spec, &fold, hps)
        };
        match model.and_then(|m| m.predict(d.design().row(i))) {
            Ok(pred) => {
                let y = truth(d.design().row(i))?;
                if y.len() != spec.p {
                    return Err(Error::DimensionMismatch {
                        context: "cv truth outputs",
                        expected: spec.p,
                        got: y.len(),
                    });
                }
                let mut fold_err = 0.0;
                for j in 0..spec.p {
                    let e = pred[j] - y[j];
                    fold_err += e * e;
                }
                sum += fold_err / spec.p as f64;
            }
            Err(_) => failed += 1,
        }
    }
    let succeeded = k - failed;
    if succeeded == 0 {
        return Err(Error::FoldFitFailed { attempted: k });
    }
    Ok(CvReport {
        mse: sum / succeeded as f64,
        attempted: k,
        failed,
    })
}
