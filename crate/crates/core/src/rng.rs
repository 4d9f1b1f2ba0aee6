//! Seed derivation for reproducible, schedule-independent sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mix a master seed with a stream index (SplitMix64 finalizer).
///
/// Every independent evaluation (shot batch, SPSA sample, MLE repeat) draws
/// from its own derived stream, so results do not depend on the order in
/// which work is scheduled.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream))
}
