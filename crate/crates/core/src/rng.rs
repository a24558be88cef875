//! Seeded pseudo-random streams. Every random draw in the crate goes through
//! here so that a `(seed, stream id)` pair fully determines the output.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// Identifier written into every output that depends on random draws.
pub const PRNG_ID: &str = "xoshiro256++ (seeded via splitmix64)";

pub type Rng = Xoshiro256PlusPlus;

pub fn rng_from_seed(seed: u64) -> Rng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Uniform on `[0, 1)` with 53 random bits.
pub fn uniform01(rng: &mut Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform on `[-1, 1)`.
pub fn symmetric_unit(rng: &mut Rng) -> f64 {
    2.0 * uniform01(rng) - 1.0
}
