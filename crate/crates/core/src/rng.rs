//! Deterministic seed derivation.
//!
//! Every stochastic stage of the pipeline (clustering init, weight init,
//! dropout, splits, synthesis) owns a ChaCha stream seeded through these
//! helpers, so results are reproducible bit-for-bit across runs and
//! platforms and independent of evaluation order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche for cheap seed mixing.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent child seed from a base seed and a stream index.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(base ^ splitmix64(stream))
}

/// Derives a per-slice seed from the global seed, patient id, and slice
/// index, so extraction is reproducible and order-independent.
pub fn slice_seed(base: u64, patient_id: &str, slice_index: usize) -> u64 {
    // FNV-1a over the identifying bytes, then splitmix to spread bits.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in patient_id.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    for &b in (slice_index as u64).to_le_bytes().iter() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(base ^ splitmix64(h))
}

/// Deterministic RNG for a given seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
