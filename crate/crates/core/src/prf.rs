//! Keyed 64-bit pseudorandom function used for seed derivation and
//! per-node scrambling bits.
//!
//! The function is stateless: the output depends only on `(key, input)`,
//! so any randomization derived from it can be recomputed in any order
//! and from any thread.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer: a bijective avalanche mix of one word.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Keyed hash `F(key, input)`.
#[inline]
pub fn prf(key: u64, input: u64) -> u64 {
    let k = mix64(key.wrapping_add(GOLDEN));
    mix64(mix64(k ^ input).wrapping_add(GOLDEN))
}

/// Seed of replication `r` under `master_seed`.
///
/// Stable across releases: changing it would change every published
/// randomized result table.
pub fn child_seed(master_seed: u64, replication: u64) -> u64 {
    prf(master_seed, replication)
}
