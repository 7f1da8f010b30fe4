use serde::{Deserialize, Serialize};

use super::kernel::{mixture_weight, Kernel};
use super::sample::TailSample;
use crate::error::{Result, TailError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaMethod {
    Hill,
    Kernel,
    OptimalUnbiased,
    Dhmz,
}

impl GammaMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            GammaMethod::Hill => "hill",
            GammaMethod::Kernel => "kernel",
            GammaMethod::OptimalUnbiased => "optimal_unbiased",
            GammaMethod::Dhmz => "dhmz",
        }
    }
}

/// Why an index estimate cannot feed an extrapolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaFlag {
    NonPositive,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailIndexEstimate {
    pub gamma_hat: f64,
    pub method: GammaMethod,
    pub k: usize,
    pub kernel: Option<Kernel>,
    pub rho_used: Option<f64>,
}

impl TailIndexEstimate {
    /// Small-`k` estimates can be negative; they are reported as-is and flagged here.
    pub fn flag(&self) -> Option<GammaFlag> {
        if !self.gamma_hat.is_finite() {
            Some(GammaFlag::NonFinite)
        } else if self.gamma_hat <= 0.0 {
            Some(GammaFlag::NonPositive)
        } else {
            None
        }
    }

    pub fn is_usable(&self) -> bool {
        self.flag().is_none()
    }
}

fn weighted_sum(sample: &TailSample, kernel: &Kernel) -> Result<f64> {
    let w = kernel.weights(sample.k())?;
    Ok(w.iter().zip(sample.top_log()).map(|(w, l)| w * l).sum())
}

/// `sum_i w_i * top_log[i]`, with `w` the increments of `t K(t)` on the grid `i/k`.
pub fn gamma_kernel(sample: &TailSample, kernel: &Kernel) -> Result<TailIndexEstimate> {
    Ok(TailIndexEstimate {
        gamma_hat: weighted_sum(sample, kernel)?,
        method: GammaMethod::Kernel,
        k: sample.k(),
        kernel: Some(*kernel),
        rho_used: kernel.rho(),
    })
}

/// Mean log-spacing of the top `k` order statistics.
pub fn hill(sample: &TailSample) -> TailIndexEstimate {
    TailIndexEstimate {
        gamma_hat: moment(sample, 1),
        method: GammaMethod::Hill,
        k: sample.k(),
        kernel: Some(Kernel::HILL),
        rho_used: None,
    }
}

/// `M_k^(alpha) = (1/k) sum_i top_log[i]^alpha`.
pub fn moment(sample: &TailSample, alpha: u32) -> f64 {
    let k = sample.k() as f64;
    sample
        .top_log()
        .iter()
        .map(|l| l.powi(alpha as i32))
        .sum::<f64>()
        / k
}

/// Moments `M^(1..=4)` in one pass.
pub(crate) fn moments_1_to_4(sample: &TailSample) -> [f64; 4] {
    let mut acc = [0.0; 4];
    for &l in sample.top_log() {
        let l2 = l * l;
        acc[0] += l;
        acc[1] += l2;
        acc[2] += l2 * l;
        acc[3] += l2 * l2;
    }
    let k = sample.k() as f64;
    acc.map(|a| a / k)
}

/// The kernel estimator with the optimal mixture kernel tuned to `rho`.
pub fn gamma_optimal_unbiased(sample: &TailSample, rho: f64) -> Result<TailIndexEstimate> {
    let kernel = Kernel::optimal_mixture(rho)?;
    Ok(TailIndexEstimate {
        gamma_hat: weighted_sum(sample, &kernel)?,
        method: GammaMethod::OptimalUnbiased,
        k: sample.k(),
        kernel: Some(kernel),
        rho_used: Some(rho),
    })
}

/// Same estimator assembled from its two components,
/// `Delta * hill + (1 - Delta) * gamma(K_{2,rho})`.
pub fn gamma_optimal_unbiased_by_mixture(sample: &TailSample, rho: f64) -> Result<f64> {
    let second = gamma_kernel(sample, &Kernel::second_order(rho)?)?.gamma_hat;
    let delta = mixture_weight(rho);
    Ok(delta * hill(sample).gamma_hat + (1.0 - delta) * second)
}

/// Hill corrected by its estimated asymptotic bias,
/// `H - (M2 - 2 H^2)(1 - rho) / (2 H rho)`.
pub fn gamma_dhmz(sample: &TailSample, rho: f64) -> Result<TailIndexEstimate> {
    if !(rho < 0.0) {
        return Err(TailError::NonNegativeRho(rho));
    }
    let [h, m2, _, _] = moments_1_to_4(sample);
    if h <= 0.0 {
        return Err(TailError::NonPositiveGamma(h));
    }
    let gamma_hat = h - (m2 - 2.0 * h * h) * (1.0 - rho) / (2.0 * h * rho);
    Ok(TailIndexEstimate {
        gamma_hat,
        method: GammaMethod::Dhmz,
        k: sample.k(),
        kernel: None,
        rho_used: Some(rho),
    })
}
