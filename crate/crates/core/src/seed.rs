//! Per-record RNG derivation.
//!
//! Every record gets its own generator seeded from `(global seed, epoch,
//! record index)`, so output does not depend on which worker handled a
//! record or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RecordRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn record_seed(global_seed: u64, epoch: u64, index: u64) -> u64 {
    let h = splitmix64(global_seed);
    let h = splitmix64(h ^ epoch);
    splitmix64(h ^ index)
}

pub fn record_rng(global_seed: u64, epoch: u64, index: u64) -> RecordRng {
    ChaCha8Rng::seed_from_u64(record_seed(global_seed, epoch, index))
}
