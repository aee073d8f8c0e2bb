//! Correlation functions and covariance assembly.
//!
//! The correlation family is the squared exponential,
//! `R(theta, a - b) = exp(-sum_d theta_d (a_d - b_d)^2)`, evaluated on
//! inputs scaled into the unit cube (length-scales then live on a sane
//! range regardless of the raw force limits). The linear regression terms
//! (`phi^2 F F^T`, `s^T Sigma_F s`) always use raw forces.
//!
//! Covariance of the sample means, per variant:
//!
//! * Kriging:   `R = tau^2 C + diag(sigma^2 / n_t)`
//! * Surrogate: `R = phi^2 F F^T + tau^2 C + (s^T Sigma_F s) I + diag(sigma^2 / n_t)`
//!
//! where `C` is the correlation matrix over scaled inputs.

use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::types::{Bounds, Dataset, DesignMatrix, ForcePoint, Hyperparameters, ModelSpec, ModelVariant};

/// Supported correlation families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationKind {
    SquaredExponential,
}

/// A correlation function with its length-scales (`theta` has either one
/// entry, shared across dimensions, or one entry per dimension).
#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    pub kind: CorrelationKind,
    theta: DVector<f64>,
}

impl Correlation {
    pub fn squared_exponential(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() || theta.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidConfig("theta entries must be positive and finite"));
        }
        Ok(Self {
            kind: CorrelationKind::SquaredExponential,
            theta: DVector::from_vec(theta),
        })
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn value(&self, a: &ForcePoint, b: &ForcePoint) -> Result<f64> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                context: "correlation arguments",
                expected: a.dim(),
                got: b.dim(),
            });
        }
        if self.theta.len() != 1 && self.theta.len() != a.dim() {
            return Err(Error::DimensionMismatch {
                context: "correlation length-scales",
                expected: a.dim(),
                got: self.theta.len(),
            });
        }
        Ok(se_corr(&self.theta, a.as_slice(), b.as_slice()))
    }
}

/// `R(theta, a - b)` for the squared-exponential family.
pub fn correlation(a: &ForcePoint, b: &ForcePoint, c: &Correlation) -> Result<f64> {
    c.value(a, b)
}

/// Sum of `theta_d * (a_d - b_d)^2` with isotropic broadcast.
fn weighted_sqdist(theta: &DVector<f64>, a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for d in 0..a.len() {
        let th = if theta.len() == 1 { theta[0] } else { theta[d] };
        let delta = a[d] - b[d];
        s += th * delta * delta;
    }
    s
}

fn se_corr(theta: &DVector<f64>, a: &[f64], b: &[f64]) -> f64 {
    libm::exp(-weighted_sqdist(theta, a, b))
}

/// A positive-definite covariance together with its Cholesky factor, the
/// log-determinant, and the diagonal jitter that was needed (0 when none).
#[derive(Debug, Clone)]
pub struct CovarianceBundle {
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    logdet: f64,
    jitter: f64,
}

impl CovarianceBundle {
    /// Factor a symmetric matrix, escalating diagonal jitter from
    /// `1e-10 * mean(diag)` by factors of 10 up to `1e-4 * mean(diag)`
    /// before giving up.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let k = matrix.nrows();
        if k == 0 || matrix.ncols() != k {
            return Err(Error::DimensionMismatch {
                context: "covariance matrix",
                expected: k,
                got: matrix.ncols(),
            });
        }
        if !matrix.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteValue("covariance matrix"));
        }
        let mean_diag = matrix.diagonal().sum() / k as f64;
        if let Some(chol) = Cholesky::new(matrix.clone()) {
            return Ok(Self::finish(matrix, chol, 0.0));
        }
        if mean_diag <= 0.0 {
            return Err(Error::NotPositiveDefinite { jitter: 0.0 });
        }
        let mut rel = 1e-10;
        while rel <= 1e-4 {
            let jitter = rel * mean_diag;
            let mut jittered = matrix.clone();
            for t in 0..k {
                jittered[(t, t)] += jitter;
            }
            if let Some(chol) = Cholesky::new(jittered.clone()) {
                return Ok(Self::finish(jittered, chol, jitter));
            }
            rel *= 10.0;
        }
        Err(Error::NotPositiveDefinite {
            jitter: 1e-4 * mean_diag,
        })
    }

    fn finish(matrix: DMatrix<f64>, chol: Cholesky<f64, Dyn>, jitter: f64) -> Self {
        let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|d| libm::log(*d)).sum::<f64>();
        Self {
            matrix,
            chol,
            logdet,
            jitter,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// The factored matrix (including any jitter that was applied).
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Lower-triangular Cholesky factor `L` with `L L^T = R`.
    pub fn l(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    /// Quadratic form `b^T R^{-1} b`.
    pub fn inv_quad(&self, b: &DVector<f64>) -> f64 {
        self.solve_vec(b).dot(b)
    }
}

fn theta_ok(spec: &ModelSpec, hp: &Hyperparameters) -> Result<()> {
    hp.validate_for(spec)
}

/// Covariance assembly over an explicit design (the dataset-free form used
/// when scoring augmented candidate designs).
pub fn assemble_from_design(
    spec: &ModelSpec,
    hp: &Hyperparameters,
    s_j: &DVector<f64>,
    design: &DesignMatrix,
    replications: &[usize],
    bounds: &Bounds,
) -> Result<CovarianceBundle> {
    theta_ok(spec, hp)?;
    let k = design.k();
    if replications.len() != k {
        return Err(Error::DimensionMismatch {
            context: "replication counts",
            expected: k,
            got: replications.len(),
        });
    }
    if design.q() != spec.q {
        return Err(Error::DimensionMismatch {
            context: "design dimension",
            expected: spec.q,
            got: design.q(),
        });
    }
    let scaled = bounds.scale01_design(design);
    let theta = hp.theta();
    let tau2 = hp.tau2();
    let mut m = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let c = tau2
                * se_corr(
                    theta,
                    scaled.row(a).transpose().as_slice(),
                    scaled.row(b).transpose().as_slice(),
                );
            m[(a, b)] = c;
            m[(b, a)] = c;
        }
    }
    if spec.variant == ModelVariant::SurrogateWithUncertainties {
        if s_j.len() != spec.q {
            return Err(Error::DimensionMismatch {
                context: "sensitivity vector",
                expected: spec.q,
                got: s_j.len(),
            });
        }
        let phi2 = hp.phi2().unwrap_or(0.0);
        let raw = design.to_matrix();
        // phi^2 F F^T plus the scalar actuator-noise term on the diagonal.
        let ffr = &raw * raw.transpose();
        let actuator = (spec.sigma_f() * s_j).dot(s_j);
        for a in 0..k {
            for b in 0..k {
                m[(a, b)] += phi2 * ffr[(a, b)];
            }
            m[(a, a)] += actuator;
        }
    }
    for t in 0..k {
        if replications[t] == 0 {
            return Err(Error::InvalidConfig("replication counts must be positive"));
        }
        m[(t, t)] += hp.sigma2() / replications[t] as f64;
    }
    CovarianceBundle::from_matrix(m)
}

/// Covariance of the sample means of `d` under `(spec, hp)`; `s_j` enters
/// only through the surrogate variant's actuator term.
pub fn assemble_covariance(
    spec: &ModelSpec,
    hp: &Hyperparameters,
    s_j: &DVector<f64>,
    d: &Dataset,
) -> Result<CovarianceBundle> {
    assemble_from_design(spec, hp, s_j, d.design(), d.replications(), d.bounds())
}

/// Covariance between a new point and each design point (length `k`).
pub fn cross_from_design(
    spec: &ModelSpec,
    hp: &Hyperparameters,
    design: &DesignMatrix,
    bounds: &Bounds,
    f0: &ForcePoint,
) -> Result<DVector<f64>> {
    theta_ok(spec, hp)?;
    if f0.dim() != spec.q || design.q() != spec.q {
        return Err(Error::DimensionMismatch {
            context: "prediction point",
            expected: spec.q,
            got: f0.dim(),
        });
    }
    let scaled = bounds.scale01_design(design);
    let f0s = bounds.scale01_point(f0);
    let tau2 = hp.tau2();
    let theta = hp.theta();
    let phi2 = match spec.variant {
        ModelVariant::SurrogateWithUncertainties => hp.phi2().unwrap_or(0.0),
        ModelVariant::StochasticKriging => 0.0,
    };
    let mut r = DVector::zeros(design.k());
    for t in 0..design.k() {
        let mut v = tau2
            * se_corr(
                theta,
                f0s.as_slice(),
                scaled.row(t).transpose().as_slice(),
            );
        if phi2 > 0.0 {
            v += phi2 * f0.values().dot(design.row(t).values());
        }
        r[t] = v;
    }
    Ok(r)
}

/// Covariance between `f0` and the historical samples of `d`.
pub fn cross_covariance(
    spec: &ModelSpec,
    hp: &Hyperparameters,
    _s_j: &DVector<f64>,
    d: &Dataset,
    f0: &ForcePoint,
) -> Result<DVector<f64>> {
    cross_from_design(spec, hp, d.design(), d.bounds(), f0)
}

/// Analytic derivative of the assembled covariance with respect to the
/// parameter at canonical index `which`:
///
/// * `0` (tau2): the correlation matrix `C`
/// * `1..=m` (theta_d): `-tau^2 * delta_d^2 .* C` in scaled coordinates
///   (the full scaled squared distance when isotropic)
/// * `m+1` (sigma2): `diag(1 / n_t)`
/// * `m+2` (phi2, surrogate): `F F^T` in raw coordinates
pub fn covariance_derivative_from_design(
    spec: &ModelSpec,
    hp: &Hyperparameters,
    design: &DesignMatrix,
    replications: &[usize],
    bounds: &Bounds,
    which: usize,
) -> Result<DMatrix<f64>> {
    theta_ok(spec, hp)?;
    let k = design.k();
    let m = hp.theta().len();
    let scaled = bounds.scale01_design(design);
    let theta = hp.theta();
    let corr = |a: usize, b: usize| {
        se_corr(
            theta,
            scaled.row(a).transpose().as_slice(),
            scaled.row(b).transpose().as_slice(),
        )
    };
    if which == 0 {
        // d/d tau2
        let mut out = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let c = corr(a, b);
                out[(a, b)] = c;
                out[(b, a)] = c;
            }
        }
        return Ok(out);
    }
    if (1..=m).contains(&which) {
        let d = which - 1;
        let tau2 = hp.tau2();
        let mut out = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let sq = if m == 1 {
                    // isotropic: R = exp(-theta * sum_d delta_d^2)
                    let mut s = 0.0;
                    for dd in 0..spec.q {
                        let delta = scaled[(a, dd)] - scaled[(b, dd)];
                        s += delta * delta;
                    }
                    s
                } else {
                    let delta = scaled[(a, d)] - scaled[(b, d)];
                    delta * delta
                };
                let v = -tau2 * sq * corr(a, b);
                out[(a, b)] = v;
                out[(b, a)] = v;
            }
        }
        return Ok(out);
    }
    if which == m + 1 {
        if replications.len() != k {
            return Err(Error::DimensionMismatch {
                context: "replication counts",
                expected: k,
                got: replications.len(),
            });
        }
        let mut out = DMatrix::zeros(k, k);
        for t in 0..k {
            out[(t, t)] = 1.0 / replications[t] as f64;
        }
        return Ok(out);
    }
    if which == m + 2 && spec.variant == ModelVariant::SurrogateWithUncertainties {
        let raw = design.to_matrix();
        return Ok(&raw * raw.transpose());
    }
    Err(Error::UnknownParameter(which))
}

/// Dataset form of [`covariance_derivative_from_design`].
pub fn covariance_derivative(
    spec: &ModelSpec,
    hp: &Hyperparameters,
    _s_j: &DVector<f64>,
    d: &Dataset,
    which: usize,
) -> Result<DMatrix<f64>> {
    covariance_derivative_from_design(spec, hp, d.design(), d.replications(), d.bounds(), which)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    fn fp(values: &[f64]) -> ForcePoint {
        ForcePoint::new(values.to_vec()).unwrap()
    }

    fn unit_dataset(points: &[&[f64]], q: usize) -> Dataset {
        // bounds [0,1]^q so scaling is the identity
        let design = DesignMatrix::new(points.iter().map(|p| fp(p)).collect()).unwrap();
        let responses = points
            .iter()
            .enumerate()
            .map(|(t, _)| DMatrix::from_element(1, 1, t as f64))
            .collect();
        Dataset::new(design, responses, Bounds::uniform(q, 0.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn correlation_closed_forms() {
        let c = Correlation::squared_exponential(vec![1.0]).unwrap();
        assert_eq!(c.value(&fp(&[0.3]), &fp(&[0.3])).unwrap(), 1.0);
        assert_relative_eq!(
            c.value(&fp(&[0.0]), &fp(&[1.0])).unwrap(),
            libm::exp(-1.0),
            max_relative = 1e-15
        );
        let c2 = Correlation::squared_exponential(vec![0.5, 2.0]).unwrap();
        assert_relative_eq!(
            c2.value(&fp(&[0.0, 0.0]), &fp(&[1.0, 1.0])).unwrap(),
            libm::exp(-2.5),
            max_relative = 1e-15
        );
    }

    #[test]
    fn correlation_dimension_checks() {
        let c = Correlation::squared_exponential(vec![1.0, 2.0]).unwrap();
        assert!(c.value(&fp(&[0.0]), &fp(&[0.0, 1.0])).is_err());
        assert!(c.value(&fp(&[0.0, 0.0, 0.0]), &fp(&[0.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn kriging_single_point_covariance() {
        let spec = ModelSpec::basic(ModelVariant::StochasticKriging, 1, 1).unwrap();
        let hp = Hyperparameters::kriging(2.0, vec![1.0], 0.5).unwrap();
        let d = unit_dataset(&[&[0.3]], 1);
        let bundle = assemble_covariance(&spec, &hp, &DVector::zeros(1), &d).unwrap();
        assert_relative_eq!(bundle.matrix()[(0, 0)], 2.5, max_relative = 1e-15);
        assert_eq!(bundle.jitter(), 0.0);
    }

    #[test]
    fn surrogate_single_point_covariance() {
        // phi^2 F F^T + tau^2 + 0 + 0 with F = (1, 0): 1*1 + 1 = 2
        let spec = ModelSpec::basic(ModelVariant::SurrogateWithUncertainties, 2, 1).unwrap();
        let hp = Hyperparameters::surrogate(1.0, vec![1.0, 1.0], 0.0, 1.0).unwrap();
        let d = unit_dataset(&[&[1.0, 0.0]], 2);
        let bundle = assemble_covariance(&spec, &hp, &DVector::zeros(2), &d).unwrap();
        assert_relative_eq!(bundle.matrix()[(0, 0)], 2.0, max_relative = 1e-15);
    }

    #[test]
    fn kriging_matches_double_loop_oracle() {
        // independent entrywise construction of tau^2 R + sigma^2 I
        let spec = ModelSpec::basic(ModelVariant::StochasticKriging, 2, 1).unwrap();
        let hp = Hyperparameters::kriging(1.7, vec![0.8, 1.3], 0.2).unwrap();
        let pts: [&[f64]; 3] = [&[0.1, 0.9], &[0.5, 0.2], &[0.85, 0.6]];
        let d = unit_dataset(&pts, 2);
        let bundle = assemble_covariance(&spec, &hp, &DVector::zeros(2), &d).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let mut s = 0.0;
                for dd in 0..2 {
                    let delta = pts[a][dd] - pts[b][dd];
                    s += hp.theta()[dd] * delta * delta;
                }
                let mut expect = 1.7 * libm::exp(-s);
                if a == b {
                    expect += 0.2;
                }
                assert_relative_eq!(bundle.matrix()[(a, b)], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cross_covariance_at_training_point_is_tau2() {
        let spec = ModelSpec::basic(ModelVariant::StochasticKriging, 1, 1).unwrap();
        let hp = Hyperparameters::kriging(2.5, vec![1.0], 0.3).unwrap();
        let d = unit_dataset(&[&[0.2], &[0.7]], 1);
        let r = cross_covariance(&spec, &hp, &DVector::zeros(1), &d, &fp(&[0.7])).unwrap();
        assert_relative_eq!(r[1], 2.5, max_relative = 1e-15);
    }

    #[test]
    fn cross_covariance_decays_far_away() {
        let spec = ModelSpec::basic(ModelVariant::StochasticKriging, 1, 1).unwrap();
        let hp = Hyperparameters::kriging(1.0, vec![200.0], 0.0).unwrap();
        // theta * delta^2 = 200 * 0.25 = 50 at the nearest point
        let d = unit_dataset(&[&[0.0], &[0.25]], 1);
        let r = cross_covariance(&spec, &hp, &DVector::zeros(1), &d, &fp(&[0.75])).unwrap();
        assert!(r.iter().all(|v| *v < 2e-22));
    }

    #[test]
    fn surrogate_cross_covariance_closed_form() {
        // bounds [3, 4] make the scaled difference exactly 1:
        // 3 * 2 * 4 + exp(-1)
        let spec = ModelSpec::basic(ModelVariant::SurrogateWithUncertainties, 1, 1).unwrap();
        let hp = Hyperparameters::surrogate(1.0, vec![1.0], 0.0, 2.0).unwrap();
        let design = DesignMatrix::new(vec![fp(&[4.0])]).unwrap();
        let responses = vec![dmatrix![0.0]];
        let d = Dataset::new(design, responses, Bounds::uniform(1, 3.0, 4.0).unwrap()).unwrap();
        let r = cross_covariance(&spec, &hp, &DVector::zeros(1), &d, &fp(&[3.0])).unwrap();
        assert_relative_eq!(r[0], 24.0 + libm::exp(-1.0), epsilon = 1e-12);
    }

    #[test]
    fn sigma2_derivative_is_identity_for_single_replicates() {
        let spec = ModelSpec::basic(ModelVariant::StochasticKriging, 1, 1).unwrap();
        let hp = Hyperparameters::kriging(1.0, vec![1.0], 0.1).unwrap();
        let d = unit_dataset(&[&[0.1], &[0.9]], 1);
        let m = covariance_derivative(&spec, &hp, &DVector::zeros(1), &d, 2).unwrap();
        assert_eq!(m, DMatrix::identity(2, 2));
    }

    #[test]
    fn tau2_derivative_is_correlation_matrix() {
        let spec = ModelSpec::basic(ModelVariant::StochasticKriging, 1, 1).unwrap();
        let hp = Hyperparameters::kriging(3.0, vec![2.0], 0.1).unwrap();
        let d = unit_dataset(&[&[0.1], &[0.6]], 1);
        let m = covariance_derivative(&spec, &hp, &DVector::zeros(1), &d, 0).unwrap();
        let r = libm::exp(-2.0 * 0.25);
        assert_relative_eq!(m[(0, 0)], 1.0, max_relative = 1e-15);
        assert_relative_eq!(m[(0, 1)], r, max_relative = 1e-14);
    }

    #[test]
    fn unknown_parameter_is_rejected() {
        let spec = ModelSpec::basic(ModelVariant::StochasticKriging, 1, 1).unwrap();
        let hp = Hyperparameters::kriging(1.0, vec![1.0], 0.1).unwrap();
        let d = unit_dataset(&[&[0.1]], 1);
        assert_eq!(
            covariance_derivative(&spec, &hp, &DVector::zeros(1), &d, 3).unwrap_err(),
            Error::UnknownParameter(3)
        );
    }

    #[test]
    fn bundle_reconstructs_and_logdet_matches() {
        let m = dmatrix![4.0, 2.0; 2.0, 3.0];
        let bundle = CovarianceBundle::from_matrix(m.clone()).unwrap();
        let rec = bundle.l() * bundle.l().transpose();
        for a in 0..2 {
            for b in 0..2 {
                assert_relative_eq!(rec[(a, b)], m[(a, b)], max_relative = 1e-8);
            }
        }
        let det: f64 = 4.0 * 3.0 - 4.0;
        assert_relative_eq!(bundle.logdet(), libm::log(det), max_relative = 1e-12);
    }

    #[test]
    fn jitter_rescues_degenerate_matrices() {
        // exactly singular: duplicated rows with no nugget
        let m = dmatrix![1.0, 1.0; 1.0, 1.0];
        let bundle = CovarianceBundle::from_matrix(m).unwrap();
        assert!(bundle.jitter() > 0.0);
        // hopeless: negative definite
        let bad = dmatrix![-1.0, 0.0; 0.0, -1.0];
        assert!(matches!(
            CovarianceBundle::from_matrix(bad),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }
}
