use serde::{Deserialize, Serialize};

use crate::error::{Result, TailError};

/// Minimum series length accepted by the estimators.
pub const MIN_SERIES_LEN: usize = 3;

/// A series sorted in decreasing order, with logarithms of its positive part
/// cached so that tail samples for many `k` can be cut without re-sorting.
#[derive(Debug, Clone)]
pub struct OrderStatistics {
    desc: Vec<f64>,
    log_desc: Vec<f64>,
    m_positive: usize,
}

impl OrderStatistics {
    pub fn new(series: &[f64]) -> Result<Self> {
        if series.len() < MIN_SERIES_LEN {
            return Err(TailError::SeriesTooShort {
                n: series.len(),
                min: MIN_SERIES_LEN,
            });
        }
        if let Some(i) = series.iter().position(|x| !x.is_finite()) {
            return Err(TailError::NonFiniteInput(i));
        }
        let mut desc = series.to_vec();
        desc.sort_by(|a, b| b.total_cmp(a));
        let m_positive = desc.iter().take_while(|&&x| x > 0.0).count();
        let log_desc = desc[..m_positive].iter().map(|x| x.ln()).collect();
        Ok(Self {
            desc,
            log_desc,
            m_positive,
        })
    }

    pub fn len(&self) -> usize {
        self.desc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.desc.is_empty()
    }

    /// Number of strictly positive observations.
    pub fn m_positive(&self) -> usize {
        self.m_positive
    }

    /// `X(n-i+1, n)` for `i = 1..=n`, i.e. the i-th largest value.
    pub fn largest(&self, i: usize) -> f64 {
        self.desc[i - 1]
    }

    pub fn descending(&self) -> &[f64] {
        &self.desc
    }

    /// Cuts the top `k` log-spacings relative to `X(n-k, n)`.
    pub fn tail(&self, k: usize) -> Result<TailSample> {
        let n = self.desc.len();
        if k == 0 || k >= n {
            return Err(TailError::KOutOfRange { k, n });
        }
        let threshold = self.desc[k];
        if threshold <= 0.0 {
            return Err(TailError::NonPositiveThreshold(threshold));
        }
        let log_threshold = self.log_desc[k];
        let top_log = self.log_desc[..k]
            .iter()
            .map(|&l| l - log_threshold)
            .collect();
        Ok(TailSample {
            n,
            k,
            top_log,
            threshold,
            m_positive: self.m_positive,
        })
    }
}

/// The `k` upper log-spacings `log X(n-i+1,n) - log X(n-k,n)`, `i = 1..=k`,
/// together with the threshold `X(n-k,n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSample {
    n: usize,
    k: usize,
    top_log: Vec<f64>,
    threshold: f64,
    m_positive: usize,
}

impl TailSample {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Non-negative, non-increasing log-spacings; entry `i - 1` holds spacing `i`.
    pub fn top_log(&self) -> &[f64] {
        &self.top_log
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn m_positive(&self) -> usize {
        self.m_positive
    }

    /// `k / (n p)`, the extrapolation ratio of a quantile at level `p`.
    pub fn extrapolation_ratio(&self, p: f64) -> f64 {
        self.k as f64 / (self.n as f64 * p)
    }
}

/// Sorts `series` and cuts its top `k` log-spacings.
pub fn build_tail_sample(series: &[f64], k: usize) -> Result<TailSample> {
    OrderStatistics::new(series)?.tail(k)
}
