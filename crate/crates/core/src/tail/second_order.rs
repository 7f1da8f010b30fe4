use serde::{Deserialize, Serialize};

use super::estimators::moments_1_to_4;
use super::sample::{OrderStatistics, TailSample};
use crate::error::{Result, TailError};

/// Moment-ratio estimate of the second-order parameter at one `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderEstimate {
    /// `None` unless `valid`.
    pub rho_hat: Option<f64>,
    pub k_rho: usize,
    /// The statistic `S_k^(2)`; NaN when its denominator vanishes.
    pub s_value: f64,
    pub valid: bool,
}

/// `S_k^(2)` from the first four log-spacing moments.
pub fn s_statistic(sample: &TailSample) -> f64 {
    let [m1, m2, m3, m4] = moments_1_to_4(sample);
    let m1_2 = m1 * m1;
    let num = (m4 - 24.0 * m1_2 * m1_2) * (m2 - 2.0 * m1_2);
    let den = m3 - 6.0 * m1_2 * m1;
    if den == 0.0 {
        return f64::NAN;
    }
    0.75 * num / (den * den)
}

/// Maps `S` to `rho_hat`; defined only on the open interval `(2/3, 3/4)`,
/// where the result is strictly negative.
pub fn rho_from_s(s: f64) -> Option<f64> {
    if s > 2.0 / 3.0 && s < 0.75 {
        let rho = (-4.0 + 6.0 * s + (3.0 * s - 2.0).sqrt()) / (4.0 * s - 3.0);
        (rho < 0.0 && rho.is_finite()).then_some(rho)
    } else {
        None
    }
}

pub fn rho_estimate(sample: &TailSample) -> SecondOrderEstimate {
    let s = s_statistic(sample);
    let rho_hat = rho_from_s(s);
    SecondOrderEstimate {
        rho_hat,
        k_rho: sample.k(),
        s_value: s,
        valid: rho_hat.is_some(),
    }
}

/// Upper end of the `k_rho` search, `min(m - 1, 2m / log log m)`.
pub fn k_rho_cap(m_positive: usize) -> Result<usize> {
    // log log m > 0 needs m > e.
    if m_positive < 3 {
        return Err(TailError::TooFewPositive(m_positive));
    }
    let m = m_positive as f64;
    let bound = 2.0 * m / m.ln().ln();
    Ok((m_positive - 1).min(bound.floor() as usize))
}

/// Largest `k` not above [`k_rho_cap`] whose `rho_hat` exists, scanning down.
/// `Ok(None)` when no `k` qualifies.
pub fn select_k_rho_sorted(stats: &OrderStatistics) -> Result<Option<SecondOrderEstimate>> {
    let cap = k_rho_cap(stats.m_positive())?.min(stats.len() - 1);
    for k in (1..=cap).rev() {
        let est = rho_estimate(&stats.tail(k)?);
        if est.valid {
            return Ok(Some(est));
        }
    }
    Ok(None)
}

/// `k_rho` for a raw series.
pub fn select_k_rho(series: &[f64]) -> Result<Option<usize>> {
    Ok(select_k_rho_sorted(&OrderStatistics::new(series)?)?.map(|e| e.k_rho))
}

/// How `xi` (the plug-in second-order parameter) was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiChoice {
    pub xi: f64,
    pub rho_estimate: Option<SecondOrderEstimate>,
    /// True when no valid `rho_hat` existed and the canonical value was used.
    pub fell_back: bool,
}

/// `rho_hat` at `k_rho`, or `canonical` when none exists.
pub fn xi_from_rho_hat(stats: &OrderStatistics, canonical: f64) -> Result<XiChoice> {
    if !(canonical < 0.0) {
        return Err(TailError::NonNegativeRho(canonical));
    }
    let est = match stats.m_positive() {
        m if m >= 3 => select_k_rho_sorted(stats)?,
        _ => None,
    };
    Ok(match est.and_then(|e| e.rho_hat.map(|r| (r, e))) {
        Some((rho, e)) => XiChoice {
            xi: rho,
            rho_estimate: Some(e),
            fell_back: false,
        },
        None => XiChoice {
            xi: canonical,
            rho_estimate: est,
            fell_back: true,
        },
    })
}
