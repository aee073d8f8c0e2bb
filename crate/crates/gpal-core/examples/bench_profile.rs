// micro-benchmark of the likelihood-evaluation path at benchmark scale
use gpal_core::*;
use gpal_core::gp::gls_coefficients;
use nalgebra::{DMatrix, DVector};
use std::time::Instant;

fn main() {
    let q = 10;
    let k = 41;
    let bounds = Bounds::default_force(q);
    let design = design::maximin_lhd(&design::LhdConfig::new(k, q, bounds.clone(), 3));
    let responses = (0..k)
        .map(|t| DMatrix::from_element(1, 1, (t as f64 * 0.37).sin() * 0.1))
        .collect();
    let d = Dataset::new(design, responses, bounds).unwrap();

    for variant in [ModelVariant::StochasticKriging, ModelVariant::SurrogateWithUncertainties] {
        let spec = ModelSpec::new(
            variant, q, 1,
            DMatrix::from_diagonal(&DVector::from_element(q, 4.0)),
            vec![1.0],
        ).unwrap().isotropic();
        let hp = match variant {
            ModelVariant::StochasticKriging => Hyperparameters::kriging(0.01, vec![1.0], 1e-4).unwrap(),
            ModelVariant::SurrogateWithUncertainties => Hyperparameters::surrogate(0.01, vec![1.0], 1e-4, 1e-9).unwrap(),
        };
        let n = 3000;
        let t0 = Instant::now();
        let mut acc = 0.0;
        for i in 0..n {
            let mut hp2 = hp.to_params();
            hp2[0] *= 1.0 + (i % 7) as f64 * 1e-3;
            let hp2 = Hyperparameters::from_params(variant, 1, &hp2).unwrap();
            let s = gls_coefficients(&spec, &hp2, &d, 0).unwrap();
            acc += s[0];
        }
        println!("{variant:?}: {:.1} us/eval (acc {acc:.3e})", t0.elapsed().as_micros() as f64 / n as f64);
    }

    // raw pieces at k=41
    let m0 = DMatrix::from_fn(k, k, |a, b| if a == b { 1.0 } else { 0.3 * ((a + b) as f64 * 0.01).cos() });
    let t0 = Instant::now();
    let n = 20000;
    let mut acc = 0.0;
    for _ in 0..n {
        let chol = m0.clone().cholesky().unwrap();
        acc += chol.l_dirty()[(0, 0)];
    }
    println!("clone+cholesky(41): {:.1} us (acc {acc:.1})", t0.elapsed().as_micros() as f64 / n as f64);

    let scaled = DMatrix::from_fn(k, q, |a, b| ((a * q + b) as f64 * 0.013).sin().abs());
    let t0 = Instant::now();
    let mut acc = 0.0;
    for _ in 0..n {
        let mut m = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let mut s = 0.0;
                for dd in 0..q {
                    let delta = scaled[(a, dd)] - scaled[(b, dd)];
                    s += delta * delta;
                }
                let v = libm::exp(-s);
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        acc += m[(1, 2)];
    }
    println!("corr build(41x41,q=10): {:.1} us (acc {acc:.1})", t0.elapsed().as_micros() as f64 / n as f64);
}
