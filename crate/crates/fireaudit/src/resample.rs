//! Bootstrap resampling of a record subset to get the empirical
//! distribution of a predicate count, and to detect degeneracy (the whole
//! distribution collapsing onto a single value).
//!
//! Each iteration derives its own RNG seed from the master seed and the
//! iteration index, so runs are bit-identical no matter how iterations are
//! scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeding::{derive_seed, domain};

/// RNG algorithm name pinned into every result, so published reports are
/// re-derivable.
pub const RNG_ALGORITHM: &str = "chacha8 / splitmix64 per-iteration seeds";

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum ResampleError {
    #[error("bootstrap subset is empty")]
    EmptySubset,
    #[error("invalid bootstrap parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapParams {
    pub n_iter: usize,
    pub sample_size: usize,
}

impl Default for BootstrapParams {
    fn default() -> Self {
        BootstrapParams { n_iter: 1000, sample_size: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub n_iter: usize,
    pub sample_size: usize,
    pub per_iteration_counts: Vec<u64>,
    pub mean: f64,
    /// Population standard deviation of the per-iteration counts.
    pub sd: f64,
    pub min: u64,
    pub max: u64,
    /// Nearest-rank 2.5th / 97.5th percentiles; always attained values.
    pub ci95: (u64, u64),
    pub degenerate: bool,
    pub master_seed: u64,
    pub rng_algorithm: String,
}

/// Nearest-rank percentile over sorted data: the ceil(p·n)-th order statistic.
fn nearest_rank(sorted: &[u64], p: f64) -> u64 {
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Draw `params.n_iter` bootstrap samples of `params.sample_size` records
/// (uniform, with replacement) from `subset`, counting `predicate` matches
/// in each.
pub fn bootstrap_count<T: Sync>(
    subset: &[T],
    predicate: impl Fn(&T) -> bool + Sync,
    params: BootstrapParams,
    master_seed: u64,
) -> Result<BootstrapResult, ResampleError> {
    if subset.is_empty() {
        return Err(ResampleError::EmptySubset);
    }
    if params.n_iter == 0 || params.sample_size == 0 {
        return Err(ResampleError::InvalidParams(
            "n_iter and sample_size must both be at least 1".into(),
        ));
    }

    let counts: Vec<u64> = (0..params.n_iter)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(master_seed, domain::BOOTSTRAP + i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut hits = 0u64;
            for _ in 0..params.sample_size {
                let idx = rng.random_range(0..subset.len());
                if predicate(&subset[idx]) {
                    hits += 1;
                }
            }
            hits
        })
        .collect();

    let n = counts.len() as f64;
    let mean = counts.iter().sum::<u64>() as f64 / n;
    let sd = (counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / n).sqrt();
    let min = *counts.iter().min().unwrap();
    let max = *counts.iter().max().unwrap();
    let mut sorted = counts.clone();
    sorted.sort_unstable();
    let ci95 = (nearest_rank(&sorted, 0.025), nearest_rank(&sorted, 0.975));

    Ok(BootstrapResult {
        n_iter: params.n_iter,
        sample_size: params.sample_size,
        per_iteration_counts: counts,
        mean,
        sd,
        min,
        max,
        ci95,
        degenerate: min == max,
        master_seed,
        rng_algorithm: RNG_ALGORITHM.to_string(),
    })
}
