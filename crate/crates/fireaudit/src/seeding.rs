//! Deterministic seed derivation.
//!
//! Every randomized component of the toolkit draws from one master seed.
//! Independent streams (bootstrap iterations, train/test splitting, per-row
//! synthesis) get their own seeds via [`derive_seed`] so results are
//! bit-identical regardless of thread count or scheduling.

/// One SplitMix64 step: mixes a 64-bit state into a well-distributed output.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed for stream `stream` from `master`.
///
/// Defined as `splitmix64(master ^ splitmix64(stream))`. The same
/// `(master, stream)` pair always yields the same seed, and distinct
/// streams decorrelate even for adjacent indices.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

/// Stream domains, so different subsystems never share a seed stream.
pub mod domain {
    /// Bootstrap resampling; iteration `i` uses stream `BOOTSTRAP + i`.
    pub const BOOTSTRAP: u64 = 0x1000_0000_0000_0000;
    /// Stratified train/test splitting; class `k` uses stream `SPLIT + k`.
    pub const SPLIT: u64 = 0x2000_0000_0000_0000;
    /// Synthetic generation; output row `i` uses stream `SYNTH + i`.
    pub const SYNTH: u64 = 0x3000_0000_0000_0000;
}
