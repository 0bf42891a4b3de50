//! Seeded random streams.
//!
//! Every realization draws from a ChaCha20 generator keyed by a 64-bit seed.
//! ChaCha20 is counter based, so a realization is a pure function of its seed
//! regardless of which worker produces it. Ensemble member `i` of a run with
//! base seed `s` uses seed `s + i` (wrapping).

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type FieldRng = ChaCha20Rng;

pub fn field_rng(seed: u64) -> FieldRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Seed of ensemble member `index` for base seed `base`.
pub fn ensemble_seed(base: u64, index: u64) -> u64 {
    base.wrapping_add(index)
}
