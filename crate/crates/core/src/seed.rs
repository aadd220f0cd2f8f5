//! Seed derivation shared by graph execution and the sweep harness.
//!
//! Every random decision in the crate is drawn from an RNG seeded by a value
//! derived here, so a run is a pure function of its base seed.

/// SplitMix64 finaliser: a bijective 64-bit avalanche mix.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one seed. Order-sensitive.
pub fn combine(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix64(base), |acc, &p| mix64(acc ^ mix64(p.wrapping_add(0x632B_E59B_D9B4_E019))))
}

/// Seed for one trial at grid point `(n, m)`.
pub fn trial_seed(base: u64, n: usize, m: usize, trial: usize) -> u64 {
    combine(base, &[n as u64, m as u64, trial as u64])
}
