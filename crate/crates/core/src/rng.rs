//! Seed derivation.
//!
//! Every random quantity in the crate is a pure function of a 64-bit seed and
//! a small tuple of integers (pair indices, trial indices, stream tags). Seeds
//! are combined with the SplitMix64 finalizer, so a draw never depends on the
//! order in which other draws were made. Longer streams (the Bernoulli
//! sequence for one compared pair) come from a `ChaCha8Rng` seeded with the
//! derived key, which is portable and bit-reproducible across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `words` into `seed`, one SplitMix64 round per word.
pub fn derive(seed: u64, words: &[u64]) -> u64 {
    words.iter().fold(splitmix64(seed), |acc, &w| {
        splitmix64(acc ^ splitmix64(w.wrapping_add(GOLDEN)))
    })
}

/// Maps a 64-bit key to a uniform in (0, 1]. Zero is excluded so that a
/// threshold test `u <= p` never fires for `p = 0`.
#[inline]
pub fn unit_open_closed(key: u64) -> f64 {
    ((key >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// The shared uniform `U_ij` for an unordered pair.
pub fn pair_uniform(seed: u64, i: usize, j: usize) -> f64 {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    unit_open_closed(derive(seed, &[STREAM_EDGE, a as u64, b as u64]))
}

/// Independent generator for the comparisons made on one pair.
pub fn pair_rng(seed: u64, i: usize, j: usize) -> ChaCha8Rng {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    ChaCha8Rng::seed_from_u64(derive(seed, &[STREAM_OUTCOME, a as u64, b as u64]))
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) const STREAM_EDGE: u64 = 1;
pub(crate) const STREAM_OUTCOME: u64 = 2;
pub(crate) const STREAM_SCORES: u64 = 3;
pub(crate) const STREAM_GRAPH: u64 = 4;
pub(crate) const STREAM_TRIAL: u64 = 5;
