//! Domain types shared by every module: force inputs, designs, datasets,
//! model configuration, and hyperparameters.
//!
//! All of these are immutable after construction and safe to share across
//! concurrent evaluators. Operations that grow a dataset return a new one.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default symmetric force limit per actuator, in the abstract force units
/// used throughout (lbf-scaled).
pub const DEFAULT_FORCE_LIMIT: f64 = 450.0;

/// Two design rows closer than this (max-abs, raw units) count as duplicates.
pub const DUPLICATE_ROW_TOL: f64 = 1e-9;

fn check_finite(values: &[f64], context: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteValue(context))
    }
}

/// Per-dimension box bounds on force inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lo: DVector<f64>,
    hi: DVector<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                context: "bounds",
                expected: lo.len(),
                got: hi.len(),
            });
        }
        check_finite(&lo, "bounds")?;
        check_finite(&hi, "bounds")?;
        if lo.iter().zip(hi.iter()).any(|(l, h)| l >= h) {
            return Err(Error::InvalidConfig("bounds require lo < hi per dimension"));
        }
        Ok(Self {
            lo: DVector::from_vec(lo),
            hi: DVector::from_vec(hi),
        })
    }

    /// Identical `[lo, hi]` interval in every dimension.
    pub fn uniform(q: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; q], vec![hi; q])
    }

    /// The default actuator box: `[-450, 450]` per dimension.
    pub fn default_force(q: usize) -> Self {
        Self::uniform(q, -DEFAULT_FORCE_LIMIT, DEFAULT_FORCE_LIMIT)
            .expect("default force bounds are valid")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &DVector<f64> {
        &self.lo
    }

    pub fn hi(&self) -> &DVector<f64> {
        &self.hi
    }

    /// Index of the first coordinate outside the box, if any.
    pub fn violation(&self, point: &ForcePoint) -> Option<usize> {
        point
            .values()
            .iter()
            .enumerate()
            .find(|(d, v)| **v < self.lo[*d] || **v > self.hi[*d])
            .map(|(d, _)| d)
    }

    pub fn contains(&self, point: &ForcePoint) -> bool {
        self.violation(point).is_none()
    }

    /// Clamp into the box; the flag reports whether anything moved.
    pub fn clamped(&self, point: &ForcePoint) -> (ForcePoint, bool) {
        let mut moved = false;
        let values: Vec<f64> = point
            .values()
            .iter()
            .enumerate()
            .map(|(d, &v)| {
                let c = v.clamp(self.lo[d], self.hi[d]);
                if c != v {
                    moved = true;
                }
                c
            })
            .collect();
        (
            ForcePoint::new(values).expect("clamped point stays finite"),
            moved,
        )
    }

    /// Map a point into the unit cube `[0, 1]^q`.
    pub fn scale01_point(&self, point: &ForcePoint) -> DVector<f64> {
        DVector::from_fn(self.dim(), |d, _| {
            (point.values()[d] - self.lo[d]) / (self.hi[d] - self.lo[d])
        })
    }

    /// Map a whole design into the unit cube, one row per point.
    pub fn scale01_design(&self, design: &DesignMatrix) -> DMatrix<f64> {
        DMatrix::from_fn(design.k(), self.dim(), |t, d| {
            (design.row(t).values()[d] - self.lo[d]) / (self.hi[d] - self.lo[d])
        })
    }
}

/// One actuator force input vector `F` of length `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcePoint {
    values: DVector<f64>,
}

impl ForcePoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite(&values, "force point")?;
        Ok(Self {
            values: DVector::from_vec(values),
        })
    }

    pub fn from_vector(values: DVector<f64>) -> Result<Self> {
        check_finite(values.as_slice(), "force point")?;
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }
}

/// A stack of design points (`k x q`).
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: Vec<ForcePoint>,
    q: usize,
}

impl DesignMatrix {
    pub fn new(rows: Vec<ForcePoint>) -> Result<Self> {
        let q = rows
            .first()
            .map(ForcePoint::dim)
            .ok_or(Error::InvalidConfig("design needs at least one row"))?;
        for row in &rows {
            if row.dim() != q {
                return Err(Error::DimensionMismatch {
                    context: "design row",
                    expected: q,
                    got: row.dim(),
                });
            }
        }
        Ok(Self { rows, q })
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let rows = (0..m.nrows())
            .map(|t| ForcePoint::new(m.row(t).iter().copied().collect()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn k(&self) -> usize {
        self.rows.len()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn row(&self, t: usize) -> &ForcePoint {
        &self.rows[t]
    }

    pub fn rows(&self) -> &[ForcePoint] {
        &self.rows
    }

    pub fn iter(&self) -> core::slice::Iter<'_, ForcePoint> {
        self.rows.iter()
    }

    /// Dense `k x q` copy in raw (unscaled) units.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.k(), self.q, |t, d| self.rows[t].values()[d])
    }

    pub fn appended(&self, point: ForcePoint) -> Result<Self> {
        if point.dim() != self.q {
            return Err(Error::DimensionMismatch {
                context: "appended design row",
                expected: self.q,
                got: point.dim(),
            });
        }
        let mut rows = self.rows.clone();
        rows.push(point);
        Ok(Self { rows, q: self.q })
    }

    pub fn without_row(&self, t: usize) -> Result<Self> {
        if self.rows.len() < 2 {
            return Err(Error::InvalidConfig("cannot drop the only design row"));
        }
        let mut rows = self.rows.clone();
        rows.remove(t);
        Ok(Self { rows, q: self.q })
    }

    /// First pair of rows that coincide within [`DUPLICATE_ROW_TOL`].
    pub fn duplicate_rows(&self) -> Option<(usize, usize)> {
        for a in 0..self.rows.len() {
            for b in (a + 1)..self.rows.len() {
                let max_abs = self.rows[a]
                    .values()
                    .iter()
                    .zip(self.rows[b].values().iter())
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0f64, f64::max);
                if max_abs <= DUPLICATE_ROW_TOL {
                    return Some((a, b));
                }
            }
        }
        None
    }
}

/// Input/output pairs: the design, per-point replicate responses, and the
/// per-point sample means the predictor works from.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    design: DesignMatrix,
    replications: Vec<usize>,
    responses: Vec<DMatrix<f64>>,
    sample_means: DMatrix<f64>,
    bounds: Bounds,
}

impl Dataset {
    /// Build from raw replicate responses (one `n_t x p` matrix per design
    /// point); sample means are computed here with a fixed summation order.
    pub fn new(design: DesignMatrix, responses: Vec<DMatrix<f64>>, bounds: Bounds) -> Result<Self> {
        let replications: Vec<usize> = responses.iter().map(DMatrix::nrows).collect();
        let p = responses
            .first()
            .map(DMatrix::ncols)
            .ok_or(Error::InvalidConfig("dataset needs at least one response"))?;
        let k = design.k();
        if responses.len() != k {
            return Err(Error::DimensionMismatch {
                context: "responses per design point",
                expected: k,
                got: responses.len(),
            });
        }
        let mut sample_means = DMatrix::zeros(k, p);
        for (t, resp) in responses.iter().enumerate() {
            for j in 0..resp.ncols().min(p) {
                let mut sum = 0.0;
                for i in 0..resp.nrows() {
                    sum += resp[(i, j)];
                }
                sample_means[(t, j)] = sum / resp.nrows() as f64;
            }
        }
        let d = Self::from_parts(design, replications, responses, sample_means, bounds);
        d.validate()?;
        Ok(d)
    }

    /// Assemble without checks; call [`Dataset::validate`] afterwards.
    pub fn from_parts(
        design: DesignMatrix,
        replications: Vec<usize>,
        responses: Vec<DMatrix<f64>>,
        sample_means: DMatrix<f64>,
        bounds: Bounds,
    ) -> Self {
        Self {
            design,
            replications,
            responses,
            sample_means,
            bounds,
        }
    }

    /// Check every structural invariant: consistent shapes, finite values,
    /// rows inside bounds, no duplicate rows, and stored sample means that
    /// reproduce the replicate means to 1e-12 (relative).
    pub fn validate(&self) -> Result<()> {
        let k = self.design.k();
        let q = self.design.q();
        let p = self.p();
        if p < 1 {
            return Err(Error::InvalidConfig("dataset needs p >= 1 outputs"));
        }
        if self.bounds.dim() != q {
            return Err(Error::DimensionMismatch {
                context: "bounds dimension",
                expected: q,
                got: self.bounds.dim(),
            });
        }
        if self.replications.len() != k || self.responses.len() != k {
            return Err(Error::DimensionMismatch {
                context: "replication bookkeeping",
                expected: k,
                got: self.replications.len().min(self.responses.len()),
            });
        }
        if self.sample_means.nrows() != k || self.sample_means.ncols() != p {
            return Err(Error::DimensionMismatch {
                context: "sample means shape",
                expected: k * p,
                got: self.sample_means.nrows() * self.sample_means.ncols(),
            });
        }
        for (t, row) in self.design.rows().iter().enumerate() {
            check_finite(row.as_slice(), "design point")?;
            if let Some(d) = self.bounds.violation(row) {
                let _ = t;
                return Err(Error::OutOfBounds(d));
            }
        }
        if let Some((a, b)) = self.design.duplicate_rows() {
            return Err(Error::DuplicateDesignRows { a, b });
        }
        for (t, resp) in self.responses.iter().enumerate() {
            if resp.ncols() != p {
                return Err(Error::DimensionMismatch {
                    context: "response outputs",
                    expected: p,
                    got: resp.ncols(),
                });
            }
            if resp.nrows() != self.replications[t] || self.replications[t] == 0 {
                return Err(Error::DimensionMismatch {
                    context: "replicate count",
                    expected: self.replications[t],
                    got: resp.nrows(),
                });
            }
            if !resp.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFiniteValue("responses"));
            }
            for j in 0..p {
                let mut sum = 0.0;
                for i in 0..resp.nrows() {
                    sum += resp[(i, j)];
                }
                let mean = sum / resp.nrows() as f64;
                let delta = (self.sample_means[(t, j)] - mean).abs();
                if delta > 1e-12 * (1.0 + mean.abs()) {
                    return Err(Error::MeanInconsistent {
                        row: t,
                        col: j,
                        delta,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.design.k()
    }

    pub fn q(&self) -> usize {
        self.design.q()
    }

    pub fn p(&self) -> usize {
        self.sample_means.ncols()
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn replications(&self) -> &[usize] {
        &self.replications
    }

    pub fn responses(&self) -> &[DMatrix<f64>] {
        &self.responses
    }

    pub fn sample_means(&self) -> &DMatrix<f64> {
        &self.sample_means
    }

    /// Column `j` of the sample means: the vector the `j`-th output is fit to.
    pub fn mean_column(&self, j: usize) -> DVector<f64> {
        DVector::from_fn(self.k(), |t, _| self.sample_means[(t, j)])
    }

    /// A new dataset with one more observed point (a single replicate).
    pub fn augmented(&self, point: ForcePoint, response: DVector<f64>) -> Result<Self> {
        if response.len() != self.p() {
            return Err(Error::DimensionMismatch {
                context: "augmented response",
                expected: self.p(),
                got: response.len(),
            });
        }
        let design = self.design.appended(point)?;
        let mut responses = self.responses.clone();
        responses.push(DMatrix::from_fn(1, self.p(), |_, j| response[j]));
        Dataset::new(design, responses, self.bounds.clone())
    }

    /// A new dataset with point `t` removed (leave-one-out folds).
    pub fn without_point(&self, t: usize) -> Result<Self> {
        let design = self.design.without_row(t)?;
        let mut responses = self.responses.clone();
        responses.remove(t);
        Dataset::new(design, responses, self.bounds.clone())
    }
}

/// Validate every [`Dataset`] invariant; side-effect free and idempotent.
pub fn validate_dataset(d: &Dataset) -> Result<()> {
    d.validate()
}

/// Which predictive model the covariance encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelVariant {
    /// Gaussian process with a nugget: spatial term plus observation noise.
    StochasticKriging,
    /// Adds actuator-uncertainty and part-uncertainty terms on top of the
    /// Kriging structure.
    SurrogateWithUncertainties,
}

impl ModelVariant {
    pub fn tag(self) -> &'static str {
        match self {
            ModelVariant::StochasticKriging => "kriging",
            ModelVariant::SurrogateWithUncertainties => "surrogate",
        }
    }
}

/// Static model configuration: variant, dimensions, known actuator-noise
/// covariance, output weights, and the length-scale parameterization.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub variant: ModelVariant,
    pub q: usize,
    pub p: usize,
    sigma_f: DMatrix<f64>,
    weights: DVector<f64>,
    isotropic: bool,
}

impl ModelSpec {
    /// Anisotropic length-scales by default (one per input dimension).
    pub fn new(
        variant: ModelVariant,
        q: usize,
        p: usize,
        sigma_f: DMatrix<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if q == 0 || p == 0 {
            return Err(Error::InvalidConfig("q and p must be positive"));
        }
        if sigma_f.nrows() != q || sigma_f.ncols() != q {
            return Err(Error::DimensionMismatch {
                context: "sigma_f shape",
                expected: q * q,
                got: sigma_f.nrows() * sigma_f.ncols(),
            });
        }
        if !sigma_f.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteValue("sigma_f"));
        }
        let scale = sigma_f.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for a in 0..q {
            for b in (a + 1)..q {
                if (sigma_f[(a, b)] - sigma_f[(b, a)]).abs() > 1e-10 * scale {
                    return Err(Error::InvalidConfig("sigma_f must be symmetric"));
                }
            }
        }
        let eig = sigma_f.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l < -1e-8 * scale) {
            return Err(Error::InvalidConfig("sigma_f must be positive semidefinite"));
        }
        if weights.len() != p {
            return Err(Error::DimensionMismatch {
                context: "weights length",
                expected: p,
                got: weights.len(),
            });
        }
        check_finite(&weights, "weights")?;
        if weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidConfig("weights must be nonnegative"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig("weights must sum to one"));
        }
        Ok(Self {
            variant,
            q,
            p,
            sigma_f,
            weights: DVector::from_vec(weights),
            isotropic: false,
        })
    }

    /// Convenience constructor: zero actuator noise, uniform weights.
    pub fn basic(variant: ModelVariant, q: usize, p: usize) -> Result<Self> {
        Self::new(variant, q, p, DMatrix::zeros(q, q), Self::uniform_weights(p))
    }

    pub fn uniform_weights(p: usize) -> Vec<f64> {
        vec![1.0 / p as f64; p]
    }

    /// Switch to a single shared length-scale.
    pub fn isotropic(mut self) -> Self {
        self.isotropic = true;
        self
    }

    pub fn is_isotropic(&self) -> bool {
        self.isotropic
    }

    pub fn sigma_f(&self) -> &DMatrix<f64> {
        &self.sigma_f
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// Number of length-scale entries: `q` anisotropic, 1 isotropic.
    pub fn theta_len(&self) -> usize {
        if self.isotropic {
            1
        } else {
            self.q
        }
    }

    /// Size of the hyperparameter vector: `m + 2` for Kriging, `m + 3`
    /// for the surrogate (the extra part-uncertainty variance).
    pub fn n_params(&self) -> usize {
        self.theta_len()
            + 2
            + usize::from(self.variant == ModelVariant::SurrogateWithUncertainties)
    }
}

/// The per-output parameter set: process variance, length-scales, noise
/// variance, and (surrogate only) part-uncertainty variance.
///
/// The canonical flattened ordering everywhere (derivatives, Fisher rows,
/// labels) is `(tau2, theta_1..theta_m, sigma2[, phi2])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    tau2: f64,
    theta: DVector<f64>,
    sigma2: f64,
    phi2: Option<f64>,
}

impl Hyperparameters {
    pub fn kriging(tau2: f64, theta: Vec<f64>, sigma2: f64) -> Result<Self> {
        Self::build(tau2, theta, sigma2, None)
    }

    pub fn surrogate(tau2: f64, theta: Vec<f64>, sigma2: f64, phi2: f64) -> Result<Self> {
        Self::build(tau2, theta, sigma2, Some(phi2))
    }

    fn build(tau2: f64, theta: Vec<f64>, sigma2: f64, phi2: Option<f64>) -> Result<Self> {
        check_finite(&theta, "theta")?;
        if !(tau2.is_finite() && sigma2.is_finite() && phi2.map_or(true, f64::is_finite)) {
            return Err(Error::NonFiniteValue("hyperparameters"));
        }
        if tau2 <= 0.0 {
            return Err(Error::InvalidConfig("tau2 must be strictly positive"));
        }
        if theta.is_empty() || theta.iter().any(|t| *t <= 0.0) {
            return Err(Error::InvalidConfig("theta entries must be positive"));
        }
        if sigma2 < 0.0 || phi2.map_or(false, |v| v < 0.0) {
            return Err(Error::InvalidConfig("variances must be nonnegative"));
        }
        Ok(Self {
            tau2,
            theta: DVector::from_vec(theta),
            sigma2,
            phi2,
        })
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn phi2(&self) -> Option<f64> {
        self.phi2
    }

    pub fn n_params(&self) -> usize {
        1 + self.theta.len() + 1 + usize::from(self.phi2.is_some())
    }

    /// Check compatibility with a model spec (variant and length-scale count).
    pub fn validate_for(&self, spec: &ModelSpec) -> Result<()> {
        if self.theta.len() != spec.theta_len() {
            return Err(Error::DimensionMismatch {
                context: "theta length",
                expected: spec.theta_len(),
                got: self.theta.len(),
            });
        }
        let wants_phi = spec.variant == ModelVariant::SurrogateWithUncertainties;
        if wants_phi != self.phi2.is_some() {
            return Err(Error::InvalidConfig(
                "phi2 must be present exactly for the surrogate variant",
            ));
        }
        Ok(())
    }

    /// Flatten in the canonical ordering.
    pub fn to_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        out.push(self.tau2);
        out.extend(self.theta.iter().copied());
        out.push(self.sigma2);
        if let Some(phi2) = self.phi2 {
            out.push(phi2);
        }
        out
    }

    /// Rebuild from the canonical ordering; `m` is the length-scale count.
    pub fn from_params(variant: ModelVariant, m: usize, params: &[f64]) -> Result<Self> {
        let wants_phi = variant == ModelVariant::SurrogateWithUncertainties;
        let expected = m + 2 + usize::from(wants_phi);
        if params.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "parameter vector",
                expected,
                got: params.len(),
            });
        }
        let theta = params[1..=m].to_vec();
        let phi2 = wants_phi.then(|| params[m + 2]);
        Self::build(params[0], theta, params[m + 1], phi2)
    }

    /// Human-readable labels aligned with the canonical ordering.
    pub fn param_labels(&self) -> Vec<alloc::string::String> {
        use alloc::format;
        let mut out = Vec::with_capacity(self.n_params());
        out.push(alloc::string::String::from("tau2"));
        for d in 0..self.theta.len() {
            out.push(format!("theta{}", d + 1));
        }
        out.push(alloc::string::String::from("sigma2"));
        if self.phi2.is_some() {
            out.push(alloc::string::String::from("phi2"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn fp(values: &[f64]) -> ForcePoint {
        ForcePoint::new(values.to_vec()).unwrap()
    }

    fn small_dataset() -> Dataset {
        let design = DesignMatrix::new(vec![fp(&[-100.0]), fp(&[200.0])]).unwrap();
        let responses = vec![dmatrix![1.0; 3.0], dmatrix![2.0]];
        Dataset::new(design, responses, Bounds::default_force(1)).unwrap()
    }

    #[test]
    fn well_formed_dataset_validates() {
        let d = small_dataset();
        assert_eq!(d.k(), 2);
        assert_eq!(d.p(), 1);
        assert_eq!(d.replications(), &[2, 1]);
        assert_eq!(d.sample_means()[(0, 0)], 2.0);
        assert!(validate_dataset(&d).is_ok());
        // idempotent
        assert!(validate_dataset(&d).is_ok());
    }

    #[test]
    fn inconsistent_mean_is_rejected() {
        let mut d = small_dataset();
        d.sample_means[(0, 0)] += 1e-3;
        match d.validate() {
            Err(Error::MeanInconsistent { row: 0, col: 0, .. }) => {}
            other => panic!("expected MeanInconsistent, got {other:?}"),
        }
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let err = DesignMatrix::new(vec![fp(&[1.0]), fp(&[1.0, 2.0])]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn duplicate_rows_are_rejected() {
        let design = DesignMatrix::new(vec![fp(&[1.0, 2.0]), fp(&[1.0, 2.0 + 1e-12])]).unwrap();
        let responses = vec![dmatrix![1.0], dmatrix![2.0]];
        let err = Dataset::new(design, responses, Bounds::default_force(2)).unwrap_err();
        assert!(matches!(err, Error::DuplicateDesignRows { .. }));
    }

    #[test]
    fn out_of_bounds_design_is_rejected() {
        let design = DesignMatrix::new(vec![fp(&[500.0])]).unwrap();
        let responses = vec![dmatrix![1.0]];
        let err = Dataset::new(design, responses, Bounds::default_force(1)).unwrap_err();
        assert_eq!(err, Error::OutOfBounds(0));
    }

    #[test]
    fn non_finite_values_are_rejected() {
        assert!(matches!(
            ForcePoint::new(vec![f64::NAN]),
            Err(Error::NonFiniteValue(_))
        ));
    }

    #[test]
    fn augmenting_grows_by_one() {
        let d = small_dataset();
        let d2 = d
            .augmented(fp(&[50.0]), DVector::from_vec(vec![5.0]))
            .unwrap();
        assert_eq!(d2.k(), 3);
        assert_eq!(d2.sample_means()[(2, 0)], 5.0);
        assert_eq!(d.k(), 2); // original untouched
    }

    #[test]
    fn scaling_maps_bounds_to_unit_cube() {
        let b = Bounds::uniform(2, -450.0, 450.0).unwrap();
        let s = b.scale01_point(&fp(&[-450.0, 450.0]));
        assert_eq!(s[0], 0.0);
        assert_eq!(s[1], 1.0);
    }

    #[test]
    fn weights_must_normalize() {
        let err = ModelSpec::new(
            ModelVariant::StochasticKriging,
            1,
            2,
            DMatrix::zeros(1, 1),
            vec![0.9, 0.2],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn param_roundtrip_keeps_ordering() {
        let hp = Hyperparameters::surrogate(2.0, vec![0.5, 3.0], 0.1, 0.7).unwrap();
        let params = hp.to_params();
        assert_eq!(params, vec![2.0, 0.5, 3.0, 0.1, 0.7]);
        let back =
            Hyperparameters::from_params(ModelVariant::SurrogateWithUncertainties, 2, &params)
                .unwrap();
        assert_eq!(back, hp);
        assert_eq!(
            hp.param_labels(),
            vec!["tau2", "theta1", "theta2", "sigma2", "phi2"]
        );
    }

    #[test]
    fn hyperparameter_count_matches_spec() {
        let spec = ModelSpec::basic(ModelVariant::SurrogateWithUncertainties, 3, 1).unwrap();
        assert_eq!(spec.n_params(), 3 + 3);
        assert_eq!(spec.clone().isotropic().n_params(), 1 + 3);
        let hp = Hyperparameters::surrogate(1.0, vec![1.0, 1.0, 1.0], 0.0, 0.0).unwrap();
        hp.validate_for(&spec).unwrap();
        assert!(hp.validate_for(&spec.isotropic()).is_err());
    }
}
