//! Seeded, portable random streams. Every parallel task draws from its own
//! ChaCha8 stream keyed by `(seed, task index)`, so results never depend on
//! scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Default master seed for every randomized operation.
pub const DEFAULT_SEED: u64 = 42;

pub fn task_rng(seed: u64, task: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(task);
    rng
}

/// Derives an independent master seed for a named sub-computation.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    // SplitMix64 finaliser.
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
