//! Inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exact Pareto sample with index `gamma`.
pub fn pareto_series(n: usize, gamma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (1.0 - rng.random::<f64>()).powf(-gamma)).collect()
}
