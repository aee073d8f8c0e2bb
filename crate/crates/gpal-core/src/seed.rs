//! Seed derivation and sampling helpers.
//!
//! Every random stream in a run is a `ChaCha8` generator seeded from the
//! master seed through [`child_seed`]. Streams are keyed by a role tag so
//! that adding one consumer (say, a new strategy) never perturbs the
//! draws seen by another.

use rand::Rng;
use rand::SeedableRng;

/// The deterministic generator used throughout the crate.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Derive a child seed from a master seed and a role tag (FNV-1a over the
/// little-endian master bytes followed by the tag bytes).
pub fn child_seed(master: u64, tag: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for b in master.to_le_bytes() {
        h = (h ^ u64::from(b)).wrapping_mul(PRIME);
    }
    for b in tag.as_bytes() {
        h = (h ^ u64::from(*b)).wrapping_mul(PRIME);
    }
    h
}

pub fn rng_from_seed(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}

/// One standard-normal draw via Box-Muller. Consumes exactly two uniforms,
/// so stream positions stay predictable.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>(); // in (0, 1]
    let u2: f64 = rng.random::<f64>();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}
