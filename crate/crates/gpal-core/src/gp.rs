//! Per-output model fitting by maximum likelihood and BLUP prediction.
//!
//! Each output is fit independently: the linear coefficients are profiled
//! out by generalized least squares at every hyperparameter setting, and
//! the profile log-likelihood is maximized by multi-start simplex search
//! over log-transformed parameters.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector};

use crate::design::{maximin_lhd, LhdConfig};
use crate::error::{Error, Result};
use crate::kernel::{assemble_covariance, covariance_derivative, cross_covariance, CovarianceBundle};
use crate::optim::{nelder_mead, SimplexOptions};
use crate::seed::child_seed;
use crate::types::{Bounds, Dataset, ForcePoint, Hyperparameters, ModelSpec, ModelVariant};

const LN_2PI: f64 = 1.8378770664093453;

/// Settings for the maximum-likelihood search.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub seed: u64,
    /// Total simplex starts per output (warm starts count toward this).
    pub restarts: usize,
    /// Evaluation budget per start; 0 picks `max(300, 150 * dim)`.
    pub max_evals: usize,
    /// Bounds on each length-scale (scaled inputs).
    pub theta_bounds: (f64, f64),
    /// Bounds on the process variance, relative to `var(Y_j)`.
    pub tau2_rel_bounds: (f64, f64),
    /// Absolute floor for the noise variances sigma2 and phi2.
    pub noise_floor: f64,
    /// Optional warm start per output (log-parameter space, indexed by
    /// output); tried before the space-filling starts and counted toward
    /// the restart budget.
    pub warm_starts: Vec<Vec<f64>>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 8,
            max_evals: 0,
            theta_bounds: (1e-3, 1e3),
            tau2_rel_bounds: (1e-8, 1e3),
            noise_floor: 1e-12,
            warm_starts: Vec::new(),
        }
    }
}

impl FitConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// Diagnostics kept with each per-output fit.
#[derive(Debug, Clone)]
pub struct FitDiagnostics {
    pub loglik: f64,
    pub jitter: f64,
    pub restarts: usize,
    pub evals: usize,
    pub converged: bool,
}

/// One output's fitted state.
#[derive(Debug, Clone)]
pub struct OutputFit {
    s_hat: DVector<f64>,
    hp: Hyperparameters,
    bundle: CovarianceBundle,
    alpha: DVector<f64>,
    diagnostics: FitDiagnostics,
}

impl OutputFit {
    pub fn s_hat(&self) -> &DVector<f64> {
        &self.s_hat
    }

    pub fn hp(&self) -> &Hyperparameters {
        &self.hp
    }

    pub fn bundle(&self) -> &CovarianceBundle {
        &self.bundle
    }

    /// Precomputed `R^{-1} (Ybar - F s_hat)`.
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn diagnostics(&self) -> &FitDiagnostics {
        &self.diagnostics
    }
}

/// A fitted multi-output model; immutable, prediction is read-only.
#[derive(Debug, Clone)]
pub struct FittedModel {
    spec: ModelSpec,
    dataset: Dataset,
    outputs: Vec<OutputFit>,
}

/// Ordinary least squares, the starting point for the surrogate's inner
/// fixed-point iteration.
fn ols(f: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let a = f.transpose() * f;
    let chol = Cholesky::new(a).ok_or(Error::RankDeficientDesign)?;
    Ok(chol.solve(&(f.transpose() * y)))
}

/// Generalized least squares against an already-factored covariance.
pub fn gls_with_covariance(
    f: &DMatrix<f64>,
    bundle: &CovarianceBundle,
    y: &DVector<f64>,
) -> Result<DVector<f64>> {
    if f.nrows() != bundle.dim() || y.len() != bundle.dim() {
        return Err(Error::DimensionMismatch {
            context: "gls shapes",
            expected: bundle.dim(),
            got: f.nrows().min(y.len()),
        });
    }
    let w = bundle.solve_mat(f);
    let a = f.transpose() * &w;
    let chol = Cholesky::new(a).ok_or(Error::RankDeficientDesign)?;
    Ok(chol.solve(&(w.transpose() * y)))
}

pub(crate) struct Profiled {
    pub s: DVector<f64>,
    pub bundle: CovarianceBundle,
    pub loglik: f64,
}

fn loglik_from(bundle: &CovarianceBundle, resid: &DVector<f64>) -> f64 {
    let k = bundle.dim() as f64;
    -0.5 * k * LN_2PI - 0.5 * bundle.logdet() - 0.5 * bundle.inv_quad(resid)
}

/// Hyperparameter-independent pieces of the likelihood, computed once per
/// dataset and reused across outputs, restarts, and simplex evaluations
/// (the optimizer calls the profile thousands of times per fit).
struct FitContext {
    /// Raw design, `k x q`.
    f: DMatrix<f64>,
    /// Scaled squared coordinate differences: one `k x k` matrix per
    /// length-scale entry (anisotropic), or their sum (isotropic).
    sq: Vec<DMatrix<f64>>,
    /// `F F^T` in raw units (surrogate only).
    gram: Option<DMatrix<f64>>,
    reps_inv: Vec<f64>,
}

impl FitContext {
    fn new(spec: &ModelSpec, d: &Dataset) -> Self {
        let k = d.k();
        let scaled = d.bounds().scale01_design(d.design());
        let m = spec.theta_len();
        let mut sq = vec![DMatrix::zeros(k, k); m];
        for a in 0..k {
            for b in (a + 1)..k {
                for dd in 0..spec.q {
                    let delta = scaled[(a, dd)] - scaled[(b, dd)];
                    let slot = if m == 1 { 0 } else { dd };
                    sq[slot][(a, b)] += delta * delta;
                }
            }
        }
        for mat in &mut sq {
            for a in 0..k {
                for b in (a + 1)..k {
                    mat[(b, a)] = mat[(a, b)];
                }
            }
        }
        let f = d.design().to_matrix();
        let gram = (spec.variant == ModelVariant::SurrogateWithUncertainties)
            .then(|| &f * f.transpose());
        let reps_inv = d.replications().iter().map(|n| 1.0 / *n as f64).collect();
        Self {
            f,
            sq,
            gram,
            reps_inv,
        }
    }

    /// `tau^2 C (+ phi^2 F F^T) + diag(sigma^2 / n_t)`, everything except
    /// the surrogate's coefficient-dependent actuator diagonal.
    fn stem(&self, hp: &Hyperparameters) -> DMatrix<f64> {
        let k = self.f.nrows();
        let tau2 = hp.tau2();
        let theta = hp.theta();
        let mut m = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let mut sum = 0.0;
                for (dd, mat) in self.sq.iter().enumerate() {
                    sum += theta[dd] * mat[(a, b)];
                }
                let v = tau2 * libm::exp(-sum);
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        if let Some(gram) = &self.gram {
            let phi2 = hp.phi2().unwrap_or(0.0);
            m += gram * phi2;
        }
        for t in 0..k {
            m[(t, t)] += hp.sigma2() * self.reps_inv[t];
        }
        m
    }

    fn profile(
        &self,
        spec: &ModelSpec,
        hp: &Hyperparameters,
        y: &DVector<f64>,
    ) -> Result<Profiled> {
        hp.validate_for(spec)?;
        match spec.variant {
            ModelVariant::StochasticKriging => {
                let bundle = CovarianceBundle::from_matrix(self.stem(hp))?;
                let s = gls_with_covariance(&self.f, &bundle, y)?;
                let resid = y - &self.f * &s;
                let loglik = loglik_from(&bundle, &resid);
                Ok(Profiled { s, bundle, loglik })
            }
            ModelVariant::SurrogateWithUncertainties => {
                let stem = self.stem(hp);
                let with_actuator = |s: &DVector<f64>| -> DMatrix<f64> {
                    let c = (spec.sigma_f() * s).dot(s);
                    let mut m = stem.clone();
                    for t in 0..m.nrows() {
                        m[(t, t)] += c;
                    }
                    m
                };
                let mut s = ols(&self.f, y)?;
                let mut bundle = CovarianceBundle::from_matrix(with_actuator(&s))?;
                for _ in 0..5 {
                    let next = gls_with_covariance(&self.f, &bundle, y)?;
                    let step = (&next - &s).amax();
                    let scale = 1.0 + s.amax();
                    s = next;
                    bundle = CovarianceBundle::from_matrix(with_actuator(&s))?;
                    if step <= 1e-8 * scale {
                        break;
                    }
                }
                let resid = y - &self.f * &s;
                let loglik = loglik_from(&bundle, &resid);
                Ok(Profiled { s, bundle, loglik })
            }
        }
    }
}

/// Profile the linear coefficients out at fixed hyperparameters. The
/// surrogate covariance depends on those coefficients, so it alternates
/// GLS and covariance reassembly (at most 5 sweeps, 1e-8 convergence).
pub(crate) fn profile(
    spec: &ModelSpec,
    hp: &Hyperparameters,
    d: &Dataset,
    j: usize,
) -> Result<Profiled> {
    FitContext::new(spec, d).profile(spec, hp, &d.mean_column(j))
}

/// Log-likelihood of output `j` at explicit coefficients and
/// hyperparameters: the multivariate-normal density of `Ybar_j` with mean
/// `F s_j` and the assembled covariance.
pub fn log_likelihood(
    spec: &ModelSpec,
    hp: &Hyperparameters,
    s_j: &DVector<f64>,
    d: &Dataset,
    j: usize,
) -> Result<f64> {
    if j >= d.p() {
        return Err(Error::DimensionMismatch {
            context: "output index",
            expected: d.p(),
            got: j,
        });
    }
    let bundle = assemble_covariance(spec, hp, s_j, d)?;
    let f = d.design().to_matrix();
    let resid = d.mean_column(j) - &f * s_j;
    Ok(loglik_from(&bundle, &resid))
}

/// Gradient of [`log_likelihood`] with respect to each hyperparameter at
/// fixed `s_j`, via the standard trace identities.
pub fn log_likelihood_gradient(
    spec: &ModelSpec,
    hp: &Hyperparameters,
    s_j: &DVector<f64>,
    d: &Dataset,
    j: usize,
) -> Result<DVector<f64>> {
    let bundle = assemble_covariance(spec, hp, s_j, d)?;
    let f = d.design().to_matrix();
    let resid = d.mean_column(j) - &f * s_j;
    let alpha = bundle.solve_vec(&resid);
    let n = hp.n_params();
    let mut grad = DVector::zeros(n);
    for a in 0..n {
        let da = covariance_derivative(spec, hp, s_j, d, a)?;
        let quad = alpha.dot(&(&da * &alpha));
        let trace = bundle.solve_mat(&da).trace();
        grad[a] = 0.5 * (quad - trace);
    }
    Ok(grad)
}

/// Generalized least-squares coefficients for output `j` under `(spec, hp)`
/// (with the surrogate's inner fixed point when the covariance depends on
/// the coefficients).
pub fn gls_coefficients(
    spec: &ModelSpec,
    hp: &Hyperparameters,
    d: &Dataset,
    j: usize,
) -> Result<DVector<f64>> {
    Ok(profile(spec, hp, d, j)?.s)
}

struct LogBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

fn log_box(spec: &ModelSpec, cfg: &FitConfig, y_var: f64) -> LogBox {
    let m = spec.theta_len();
    let v = y_var.max(1e-9);
    let mut lo = Vec::with_capacity(spec.n_params());
    let mut hi = Vec::with_capacity(spec.n_params());
    lo.push(libm::log(cfg.tau2_rel_bounds.0 * v));
    hi.push(libm::log(cfg.tau2_rel_bounds.1 * v));
    for _ in 0..m {
        lo.push(libm::log(cfg.theta_bounds.0));
        hi.push(libm::log(cfg.theta_bounds.1));
    }
    let noise_hi = libm::log(v.max(cfg.noise_floor * 10.0));
    lo.push(libm::log(cfg.noise_floor));
    hi.push(noise_hi);
    if spec.variant == ModelVariant::SurrogateWithUncertainties {
        lo.push(libm::log(cfg.noise_floor));
        hi.push(noise_hi);
    }
    LogBox { lo, hi }
}

fn hp_from_log(spec: &ModelSpec, x: &[f64]) -> Result<Hyperparameters> {
    let m = spec.theta_len();
    let params: Vec<f64> = x.iter().map(|v| libm::exp(*v)).collect();
    Hyperparameters::from_params(spec.variant, m, &params)
}

fn population_variance(y: &DVector<f64>) -> f64 {
    let n = y.len() as f64;
    let mean = y.sum() / n;
    y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

impl FittedModel {
    /// Fit every output by maximizing the profile likelihood over the
    /// hyperparameters. Deterministic given `(data, cfg.seed, cfg)`.
    pub fn fit(spec: &ModelSpec, d: &Dataset, cfg: &FitConfig) -> Result<Self> {
        d.validate()?;
        if d.q() != spec.q || d.p() != spec.p {
            return Err(Error::DimensionMismatch {
                context: "dataset vs model spec",
                expected: spec.q * spec.p,
                got: d.q() * d.p(),
            });
        }
        if cfg.restarts == 0 {
            return Err(Error::InvalidConfig("fit needs at least one restart"));
        }
        let dims = spec.n_params();
        let max_evals = if cfg.max_evals == 0 {
            (75 * dims).max(200)
        } else {
            cfg.max_evals
        };
        // likelihood surfaces here are flat near the optimum; 1e-3 in
        // log-parameter space is ample and keeps refit loops affordable
        let opts = SimplexOptions {
            max_evals,
            f_tol: 1e-9,
            x_tol: 1e-3,
        };

        let ctx = FitContext::new(spec, d);
        let mut outputs = Vec::with_capacity(spec.p);
        for j in 0..spec.p {
            let y = d.mean_column(j);
            let boxes = log_box(spec, cfg, population_variance(&y));

            // starts: this output's warm start first, then a seeded
            // space-filling sample
            let mut starts: Vec<Vec<f64>> = Vec::with_capacity(cfg.restarts);
            if let Some(w) = cfg.warm_starts.get(j) {
                if w.len() == dims {
                    let mut clamped = w.clone();
                    for (d, v) in clamped.iter_mut().enumerate() {
                        *v = v.clamp(boxes.lo[d], boxes.hi[d]);
                    }
                    starts.push(clamped);
                }
            }
            let n_lhd = cfg.restarts - starts.len();
            if n_lhd > 0 {
                let lhd_bounds = Bounds::new(boxes.lo.clone(), boxes.hi.clone())?;
                let lhd = maximin_lhd(&LhdConfig {
                    n: n_lhd,
                    q: dims,
                    bounds: lhd_bounds,
                    seed: child_seed(cfg.seed, "fit-restarts").wrapping_add(j as u64),
                    sweeps: 64,
                });
                for row in lhd.rows() {
                    starts.push(row.as_slice().to_vec());
                }
            }

            let mut best: Option<(f64, Vec<f64>, usize, bool)> = None;
            let mut total_evals = 0usize;
            for start in &starts {
                let mut objective = |x: &[f64]| -> f64 {
                    match hp_from_log(spec, x).and_then(|hp| ctx.profile(spec, &hp, &y)) {
                        Ok(p) if p.loglik.is_finite() => -p.loglik,
                        _ => f64::INFINITY,
                    }
                };
                let res = nelder_mead(&mut objective, start, &boxes.lo, &boxes.hi, &opts);
                total_evals += res.evals;
                if res.f.is_finite() {
                    let better = best.as_ref().map_or(true, |(bf, ..)| res.f < *bf);
                    if better {
                        best = Some((res.f, res.x, res.evals, res.converged));
                    }
                }
            }
            let (neg_ll, x_hat, _, converged) = best.ok_or(Error::OptimizationFailed(
                "all restarts produced non-finite likelihoods",
            ))?;
            let hp = hp_from_log(spec, &x_hat)?;
            let profiled = ctx.profile(spec, &hp, &y)?;
            let resid = &y - &ctx.f * &profiled.s;
            let alpha = profiled.bundle.solve_vec(&resid);
            outputs.push(OutputFit {
                s_hat: profiled.s,
                hp,
                alpha,
                diagnostics: FitDiagnostics {
                    loglik: -neg_ll,
                    jitter: profiled.bundle.jitter(),
                    restarts: starts.len(),
                    evals: total_evals,
                    converged,
                },
                bundle: profiled.bundle,
            });
        }
        Ok(Self {
            spec: spec.clone(),
            dataset: d.clone(),
            outputs,
        })
    }

    /// Build a model at fixed hyperparameters (no likelihood search); the
    /// coefficients still come from GLS.
    pub fn with_hyperparameters(
        spec: &ModelSpec,
        d: &Dataset,
        hps: Vec<Hyperparameters>,
    ) -> Result<Self> {
        d.validate()?;
        if hps.len() != spec.p {
            return Err(Error::DimensionMismatch {
                context: "hyperparameter sets",
                expected: spec.p,
                got: hps.len(),
            });
        }
        let f = d.design().to_matrix();
        let mut outputs = Vec::with_capacity(spec.p);
        for (j, hp) in hps.into_iter().enumerate() {
            hp.validate_for(spec)?;
            let profiled = profile(spec, &hp, d, j)?;
            let resid = d.mean_column(j) - &f * &profiled.s;
            let alpha = profiled.bundle.solve_vec(&resid);
            outputs.push(OutputFit {
                s_hat: profiled.s,
                hp,
                alpha,
                diagnostics: FitDiagnostics {
                    loglik: profiled.loglik,
                    jitter: profiled.bundle.jitter(),
                    restarts: 0,
                    evals: 0,
                    converged: true,
                },
                bundle: profiled.bundle,
            });
        }
        Ok(Self {
            spec: spec.clone(),
            dataset: d.clone(),
            outputs,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn output(&self, j: usize) -> &OutputFit {
        &self.outputs[j]
    }

    pub fn outputs(&self) -> &[OutputFit] {
        &self.outputs
    }

    /// Sum of the per-output fitted log-likelihoods.
    pub fn total_loglik(&self) -> f64 {
        self.outputs.iter().map(|o| o.diagnostics.loglik).sum()
    }

    /// Log-space flattened hyperparameters per output, usable as warm
    /// starts for a refit on related data.
    pub fn log_params(&self, j: usize) -> Vec<f64> {
        self.outputs[j]
            .hp
            .to_params()
            .iter()
            .map(|v| libm::log(v.max(1e-300)))
            .collect()
    }

    fn check_point(&self, f0: &ForcePoint) -> Result<()> {
        if f0.dim() != self.spec.q {
            return Err(Error::DimensionMismatch {
                context: "prediction point",
                expected: self.spec.q,
                got: f0.dim(),
            });
        }
        Ok(())
    }

    /// Whether a query point sits outside the training bounds (callers may
    /// want to log this; prediction itself still proceeds).
    pub fn out_of_bounds(&self, f0: &ForcePoint) -> bool {
        !self.dataset.bounds().contains(f0)
    }

    /// BLUP prediction at `f0`, one value per output:
    /// `F_0 s_hat + r(F_0)^T R^{-1} (Ybar - F s_hat)`.
    pub fn predict(&self, f0: &ForcePoint) -> Result<DVector<f64>> {
        self.check_point(f0)?;
        let mut out = DVector::zeros(self.spec.p);
        for (j, fit) in self.outputs.iter().enumerate() {
            let r = cross_covariance(&self.spec, &fit.hp, &fit.s_hat, &self.dataset, f0)?;
            out[j] = f0.values().dot(&fit.s_hat) + r.dot(&fit.alpha);
        }
        Ok(out)
    }

    /// Predictive variance at `f0` per output:
    /// `tau^2 - r(F_0)^T R^{-1} r(F_0)`, clamped at zero.
    pub fn predict_variance(&self, f0: &ForcePoint) -> Result<DVector<f64>> {
        self.check_point(f0)?;
        let mut out = DVector::zeros(self.spec.p);
        for (j, fit) in self.outputs.iter().enumerate() {
            let r = cross_covariance(&self.spec, &fit.hp, &fit.s_hat, &self.dataset, f0)?;
            out[j] = (fit.hp.tau2() - fit.bundle.inv_quad(&r)).max(0.0);
        }
        Ok(out)
    }
}

/// One-line summary of fit diagnostics (used by harness logs).
pub fn describe_fit(model: &FittedModel) -> String {
    use core::fmt::Write;
    let mut s = String::new();
    let _ = write!(
        s,
        "loglik={:.4} jitter_max={:.1e}",
        model.total_loglik(),
        model
            .outputs()
            .iter()
            .map(|o| o.diagnostics().jitter)
            .fold(0.0f64, f64::max)
    );
    s
}
