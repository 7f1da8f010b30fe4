use rayon::prelude::*;
use serde::Serialize;

use super::model::{generate, ModelSpec};
use super::stream::SeededStream;
use crate::error::{Result, TailError};

/// Default cap on `n_samples * sample_size` simulated observations.
pub const DEFAULT_DRAW_BUDGET: u128 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrueQuantile {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub sample_size: usize,
}

/// Empirical `(1 - p)`-quantile: the order statistic of rank `ceil(n (1 - p))`.
/// Reorders `values`.
pub fn empirical_upper_quantile(values: &mut [f64], p: f64) -> Result<f64> {
    let n = values.len();
    if n == 0 {
        return Err(TailError::SeriesTooShort { n, min: 1 });
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(TailError::TailProbability { p, limit: 1.0 });
    }
    // n - ceil(n (1 - p)) = floor(n p); the guard absorbs representation error in n p.
    let above = ((n as f64 * p) + 1e-9).floor() as usize;
    let idx = n - 1 - above.min(n - 1);
    let (_, v, _) = values.select_nth_unstable_by(idx, f64::total_cmp);
    Ok(*v)
}

/// Mean over `n_samples` independent series of the empirical `(1 - p)`-quantile,
/// with its standard error. Replicate `i` uses `stream.split(i)`.
pub fn true_quantile_mc(
    spec: &ModelSpec,
    p: f64,
    n_samples: usize,
    sample_size: usize,
    stream: &SeededStream,
) -> Result<TrueQuantile> {
    true_quantile_mc_with_budget(spec, p, n_samples, sample_size, stream, DEFAULT_DRAW_BUDGET)
}

pub fn true_quantile_mc_with_budget(
    spec: &ModelSpec,
    p: f64,
    n_samples: usize,
    sample_size: usize,
    stream: &SeededStream,
    budget: u128,
) -> Result<TrueQuantile> {
    spec.validate()?;
    if n_samples == 0 || sample_size == 0 {
        return Err(TailError::Config("n_samples and sample_size must be positive".into()));
    }
    let requested = n_samples as u128 * sample_size as u128;
    if requested > budget {
        return Err(TailError::BudgetExceeded { requested, budget });
    }
    let quantiles = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut xs = generate(spec, sample_size, &stream.split(i as u64))?;
            empirical_upper_quantile(&mut xs, p)
        })
        .collect::<Result<Vec<f64>>>()?;
    let m = n_samples as f64;
    let mean = quantiles.iter().sum::<f64>() / m;
    let std_error = if n_samples > 1 {
        let var = quantiles.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt()
    } else {
        f64::NAN
    };
    Ok(TrueQuantile { estimate: mean, std_error, n_samples, sample_size })
}
