//! Maximin Latin hypercube designs for the initial design, candidate pool,
//! and evaluation pool.
//!
//! Construction: a random Latin hypercube (one shuffled bin permutation per
//! column, points at bin midpoints) followed by coordinate-swap hill
//! climbing on the minimum pairwise distance. Swapping two entries within a
//! column preserves the Latin property by construction, and a swap is kept
//! only when the minimum distance strictly increases, so the final design
//! is never worse than the initial one.

use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::seed::rng_from_seed;
use crate::types::{Bounds, DesignMatrix, ForcePoint};

#[derive(Debug, Clone)]
pub struct LhdConfig {
    pub n: usize,
    pub q: usize,
    pub bounds: Bounds,
    pub seed: u64,
    /// Local-search iterations (candidate swaps examined).
    pub sweeps: usize,
}

impl LhdConfig {
    /// Default local-search budget of 2000 sweeps.
    pub fn new(n: usize, q: usize, bounds: Bounds, seed: u64) -> Self {
        Self {
            n,
            q,
            bounds,
            seed,
            sweeps: 2000,
        }
    }
}

/// Minimum pairwise Euclidean distance in raw units; infinite for designs
/// with fewer than two points.
pub fn min_pairwise_distance(design: &DesignMatrix) -> f64 {
    let k = design.k();
    let mut best = f64::INFINITY;
    for a in 0..k {
        for b in (a + 1)..k {
            let d2: f64 = design
                .row(a)
                .values()
                .iter()
                .zip(design.row(b).values().iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            best = best.min(d2);
        }
    }
    libm::sqrt(best)
}

/// Bin index of every coordinate when the bounds are split into `n` equal
/// intervals; the Latin property holds iff each column is a permutation of
/// `0..n`.
pub fn bin_indices(design: &DesignMatrix, bounds: &Bounds) -> Vec<Vec<usize>> {
    let n = design.k();
    (0..design.q())
        .map(|d| {
            (0..n)
                .map(|t| {
                    let v = design.row(t).values()[d];
                    let unit = (v - bounds.lo()[d]) / (bounds.hi()[d] - bounds.lo()[d]);
                    let bin = libm::floor(unit * n as f64) as isize;
                    bin.clamp(0, n as isize - 1) as usize
                })
                .collect()
        })
        .collect()
}

/// Exact integer check of the Latin property per column.
pub fn is_latin(design: &DesignMatrix, bounds: &Bounds) -> bool {
    let n = design.k();
    bin_indices(design, bounds).iter().all(|col| {
        let mut seen = vec![false; n];
        for &b in col {
            if seen[b] {
                return false;
            }
            seen[b] = true;
        }
        true
    })
}

fn sqdist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Generate a maximin Latin hypercube design. Deterministic per seed; the
/// same seed with `sweeps = 0` reproduces the starting (unsearched) design.
pub fn maximin_lhd(cfg: &LhdConfig) -> DesignMatrix {
    assert!(cfg.n >= 1 && cfg.q >= 1, "need n >= 1 and q >= 1");
    assert_eq!(cfg.bounds.dim(), cfg.q, "bounds dimension mismatch");
    let n = cfg.n;
    let q = cfg.q;
    let mut rng = rng_from_seed(cfg.seed);

    // unit-cube coordinates at bin midpoints
    let mut unit = vec![vec![0.0f64; q]; n];
    for d in 0..q {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        for (t, row) in unit.iter_mut().enumerate() {
            row[d] = (perm[t] as f64 + 0.5) / n as f64;
        }
    }

    if n > 1 && cfg.sweeps > 0 {
        // squared distances in unit coordinates
        let mut d2 = vec![vec![0.0f64; n]; n];
        for a in 0..n {
            for b in (a + 1)..n {
                let v = sqdist(&unit[a], &unit[b]);
                d2[a][b] = v;
                d2[b][a] = v;
            }
        }
        let global_min = |d2: &Vec<Vec<f64>>| -> f64 {
            let mut m = f64::INFINITY;
            for a in 0..n {
                for b in (a + 1)..n {
                    m = m.min(d2[a][b]);
                }
            }
            m
        };
        let mut current = global_min(&d2);

        let mut save_a = vec![0.0f64; n];
        let mut save_b = vec![0.0f64; n];
        for _ in 0..cfg.sweeps {
            let d = rng.random_range(0..q);
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            // propose swapping column d between rows a and b
            let (va, vb) = (unit[a][d], unit[b][d]);
            unit[a][d] = vb;
            unit[b][d] = va;
            save_a.copy_from_slice(&d2[a]);
            save_b.copy_from_slice(&d2[b]);
            for t in 0..n {
                if t != a {
                    let v = sqdist(&unit[a], &unit[t]);
                    d2[a][t] = v;
                    d2[t][a] = v;
                }
                if t != b {
                    let v = sqdist(&unit[b], &unit[t]);
                    d2[b][t] = v;
                    d2[t][b] = v;
                }
            }
            let proposed = global_min(&d2);
            if proposed > current {
                current = proposed;
            } else {
                unit[a][d] = va;
                unit[b][d] = vb;
                for t in 0..n {
                    d2[a][t] = save_a[t];
                    d2[t][a] = save_a[t];
                    d2[b][t] = save_b[t];
                    d2[t][b] = save_b[t];
                }
            }
        }
    }

    let rows: Vec<ForcePoint> = unit
        .iter()
        .map(|row| {
            ForcePoint::new(
                (0..q)
                    .map(|d| cfg.bounds.lo()[d] + row[d] * (cfg.bounds.hi()[d] - cfg.bounds.lo()[d]))
                    .collect(),
            )
            .expect("midpoint coordinates are finite")
        })
        .collect();
    DesignMatrix::new(rows).expect("LHD rows share the configured dimension")
}
