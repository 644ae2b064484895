//! Seed derivation for reproducible parallel runs.
//!
//! Every random stream in the crate is a [`ChaCha8Rng`] seeded from a 64-bit
//! value. Streams for sub-tasks (replica `r` of grid point `p`, regeneration
//! attempt `a`, ...) are obtained by hashing the parent seed with the task's
//! coordinates, so results never depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used by every simulation in this crate.
pub type SimRng = ChaCha8Rng;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash a parent seed together with a path of task coordinates.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
