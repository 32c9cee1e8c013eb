//! Seeded randomness.
//!
//! Every random draw in the toolkit goes through [`ChaCha8Rng`] so that runs
//! are reproducible bit for bit across platforms. Sub-streams are derived
//! with a SplitMix64 finalizer so that adding a consumer never shifts the
//! draws of an existing one.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sub-stream `stream` of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

pub fn standard_normal(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn fill_normal(rng: &mut Rng, sigma: f64, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = sigma * standard_normal(rng);
    }
}
