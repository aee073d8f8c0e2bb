//! Shared random-instance builders for the integration suites.

use gpal_core::*;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn rng(seed: u64) -> seed::SeededRng {
    seed::rng_from_seed(seed)
}

/// A random dataset on `[0, 1]^q` with `k` well-separated points and a mix
/// of replicate counts.
pub fn random_dataset<R: Rng>(rng: &mut R, k: usize, q: usize, p: usize) -> Dataset {
    let bounds = Bounds::uniform(q, 0.0, 1.0).unwrap();
    // jittered grid keeps points apart without rejection sampling
    let rows: Vec<ForcePoint> = (0..k)
        .map(|t| {
            ForcePoint::new(
                (0..q)
                    .map(|d| {
                        let base = (t as f64 + 0.5) / k as f64;
                        let wiggle = 0.4 / k as f64 * (rng.random::<f64>() - 0.5);
                        if d % 2 == 0 {
                            (base + wiggle).clamp(0.0, 1.0)
                        } else {
                            (1.0 - base + wiggle).clamp(0.0, 1.0)
                        }
                    })
                    .collect(),
            )
            .unwrap()
        })
        .collect();
    let design = DesignMatrix::new(rows).unwrap();
    let responses: Vec<DMatrix<f64>> = (0..k)
        .map(|_| {
            let n_t = 1 + (rng.random::<u32>() % 2) as usize;
            DMatrix::from_fn(n_t, p, |_, _| rng.random::<f64>() * 2.0 - 1.0)
        })
        .collect();
    Dataset::new(design, responses, bounds).unwrap()
}

/// Like [`random_dataset`] but with responses from a coherent linear
/// trend plus bounded noise, keeping GLS systems well-scaled.
pub fn coherent_dataset<R: Rng>(rng: &mut R, k: usize, q: usize, p: usize) -> Dataset {
    let base = random_dataset(rng, k, q, p);
    let s_true = DMatrix::from_fn(q, p, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let responses: Vec<DMatrix<f64>> = (0..k)
        .map(|t| {
            let n_t = base.replications()[t];
            DMatrix::from_fn(n_t, p, |_, j| {
                base.design().row(t).values().dot(&s_true.column(j))
                    + 0.3 * (rng.random::<f64>() - 0.5)
            })
        })
        .collect();
    Dataset::new(base.design().clone(), responses, base.bounds().clone()).unwrap()
}

/// Random hyperparameters in a comfortably PD regime.
pub fn random_hp<R: Rng>(rng: &mut R, spec: &ModelSpec) -> Hyperparameters {
    let m = spec.theta_len();
    let tau2 = 0.3 + rng.random::<f64>() * 2.0;
    let theta: Vec<f64> = (0..m).map(|_| 0.5 + rng.random::<f64>() * 6.0).collect();
    let sigma2 = 0.05 + rng.random::<f64>() * 0.4;
    match spec.variant {
        ModelVariant::StochasticKriging => Hyperparameters::kriging(tau2, theta, sigma2).unwrap(),
        ModelVariant::SurrogateWithUncertainties => {
            let phi2 = 0.02 + rng.random::<f64>() * 0.3;
            Hyperparameters::surrogate(tau2, theta, sigma2, phi2).unwrap()
        }
    }
}

/// A random model spec; surrogate variants get a random PSD actuator
/// covariance.
pub fn random_spec<R: Rng>(
    rng: &mut R,
    variant: ModelVariant,
    q: usize,
    p: usize,
) -> ModelSpec {
    let sigma_f = match variant {
        ModelVariant::StochasticKriging => DMatrix::zeros(q, q),
        ModelVariant::SurrogateWithUncertainties => {
            let a = DMatrix::from_fn(q, q, |_, _| rng.random::<f64>() - 0.5);
            &a * a.transpose() * 0.1
        }
    };
    let raw: Vec<f64> = (0..p).map(|_| 0.2 + rng.random::<f64>()).collect();
    let sum: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
    ModelSpec::new(variant, q, p, sigma_f, weights).unwrap()
}

pub fn random_s<R: Rng>(rng: &mut R, q: usize) -> DVector<f64> {
    DVector::from_fn(q, |_, _| rng.random::<f64>() * 2.0 - 1.0)
}
