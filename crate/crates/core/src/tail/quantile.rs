//! Extreme quantile estimators `x_p = U(1/p)` extrapolated from the top `k`
//! order statistics.

use serde::{Deserialize, Serialize};

use super::estimators::{gamma_dhmz, gamma_kernel, moments_1_to_4, TailIndexEstimate};
use super::kernel::Kernel;
use super::sample::TailSample;
use crate::error::{Result, TailError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum QuantileMethod {
    Unbiased { xi: f64 },
    Weissman,
    Dhmz,
}

impl QuantileMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            QuantileMethod::Unbiased { .. } => "unbiased",
            QuantileMethod::Weissman => "weissman",
            QuantileMethod::Dhmz => "dhmz",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileWarning {
    /// The multiplicative second-order correction was `<= 0`.
    CorrectionOvershoot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileEstimate {
    pub x_hat: f64,
    pub p: f64,
    pub k: usize,
    pub method: QuantileMethod,
    /// Second-order correction multiplying the Weissman part; 1 when absent.
    pub correction_factor: f64,
    pub gamma_hat: f64,
    pub ci: Option<(f64, f64)>,
    pub warning: Option<QuantileWarning>,
}

impl QuantileEstimate {
    pub fn is_usable(&self) -> bool {
        self.warning.is_none() && self.x_hat.is_finite()
    }
}

fn check_p(sample: &TailSample, p: f64, allow_boundary: bool) -> Result<f64> {
    let limit = sample.k() as f64 / sample.n() as f64;
    let ok = p > 0.0 && (p < limit || (allow_boundary && p == limit));
    if !ok {
        return Err(TailError::TailProbability { p, limit });
    }
    Ok(sample.extrapolation_ratio(p))
}

fn require_usable(gamma: &TailIndexEstimate) -> Result<()> {
    if gamma.is_usable() {
        Ok(())
    } else {
        Err(TailError::NonPositiveGamma(gamma.gamma_hat))
    }
}

/// Estimate of the second-order rate `A(n/k)` from the gap between the Hill
/// and `K_{2,xi}` estimators.
pub fn estimate_a(sample: &TailSample, xi: f64) -> Result<f64> {
    if !(xi < 0.0) {
        return Err(TailError::NonNegativeRho(xi));
    }
    let k1 = gamma_kernel(sample, &Kernel::HILL)?.gamma_hat;
    let k2 = gamma_kernel(sample, &Kernel::second_order(xi)?)?.gamma_hat;
    Ok(-(1.0 - xi) * (1.0 - 2.0 * xi) / (xi * xi) * (k1 - k2))
}

/// Weissman extrapolation times `exp{A_hat ((k/np)^xi - 1) / xi}`.
///
/// `gamma` should come from the optimal-mixture estimator; flagged
/// (non-positive or non-finite) indices are refused.
pub fn quantile_unbiased(
    sample: &TailSample,
    p: f64,
    xi: f64,
    gamma: &TailIndexEstimate,
) -> Result<QuantileEstimate> {
    let ratio = check_p(sample, p, false)?;
    require_usable(gamma)?;
    let a_hat = estimate_a(sample, xi)?;
    let exponent = a_hat * (ratio.powf(xi) - 1.0) / xi;
    if !exponent.is_finite() {
        return Err(TailError::NonFinite("quantile correction exponent"));
    }
    let correction_factor = exponent.exp();
    let x_hat = sample.threshold() * ratio.powf(gamma.gamma_hat) * correction_factor;
    if !x_hat.is_finite() {
        return Err(TailError::NonFinite("unbiased quantile"));
    }
    Ok(QuantileEstimate {
        x_hat,
        p,
        k: sample.k(),
        method: QuantileMethod::Unbiased { xi },
        correction_factor,
        gamma_hat: gamma.gamma_hat,
        ci: None,
        warning: None,
    })
}

/// `X(n-k,n) (k/np)^gamma`. Accepts `p = k/n` (returns the threshold).
pub fn quantile_weissman(
    sample: &TailSample,
    p: f64,
    gamma: &TailIndexEstimate,
) -> Result<QuantileEstimate> {
    let ratio = check_p(sample, p, true)?;
    require_usable(gamma)?;
    let x_hat = sample.threshold() * ratio.powf(gamma.gamma_hat);
    if !x_hat.is_finite() {
        return Err(TailError::NonFinite("weissman quantile"));
    }
    Ok(QuantileEstimate {
        x_hat,
        p,
        k: sample.k(),
        method: QuantileMethod::Weissman,
        correction_factor: 1.0,
        gamma_hat: gamma.gamma_hat,
        ci: None,
        warning: None,
    })
}

/// Bias-corrected Hill extrapolation with the corrected multiplicative factor
/// `1 - (M2 - 2H^2)(1 - rho)^2 / (2 H rho^2) * (1 - (k/np)^rho)`.
///
/// A non-positive factor is reported through `warning` rather than as an error.
pub fn quantile_dhmz(sample: &TailSample, p: f64, rho: f64) -> Result<QuantileEstimate> {
    let ratio = check_p(sample, p, false)?;
    let gamma = gamma_dhmz(sample, rho)?;
    let [h, m2, _, _] = moments_1_to_4(sample);
    let bias = (m2 - 2.0 * h * h) * (1.0 - rho) * (1.0 - rho) / (2.0 * h * rho * rho);
    let correction_factor = 1.0 - bias * (1.0 - ratio.powf(rho));
    let x_hat = sample.threshold() * ratio.powf(gamma.gamma_hat) * correction_factor;
    if !x_hat.is_finite() {
        return Err(TailError::NonFinite("dhmz quantile"));
    }
    Ok(QuantileEstimate {
        x_hat,
        p,
        k: sample.k(),
        method: QuantileMethod::Dhmz,
        correction_factor,
        gamma_hat: gamma.gamma_hat,
        ci: None,
        warning: (correction_factor <= 0.0).then_some(QuantileWarning::CorrectionOvershoot),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tail::estimators::{gamma_optimal_unbiased, hill};
    use crate::tail::sample::build_tail_sample;
    use std::f64::consts::E;

    fn toy() -> TailSample {
        build_tail_sample(&[1.0, E, E * E, E.powi(3)], 2).unwrap()
    }

    #[test]
    fn a_hat_toy() {
        assert!((estimate_a(&toy(), -1.0).unwrap() - 6.0).abs() < 1e-12);
        assert!(estimate_a(&toy(), 0.0).is_err());
        let flat = build_tail_sample(&[2.0; 9], 4).unwrap();
        assert_eq!(estimate_a(&flat, -0.5).unwrap(), 0.0);
    }

    #[test]
    fn weissman_toy_and_boundary() {
        let s = toy();
        let q = quantile_weissman(&s, 0.1, &hill(&s)).unwrap();
        assert!((q.x_hat - 30.391_314_752_184_236).abs() < 1e-11);
        let b = quantile_weissman(&s, 0.5, &hill(&s)).unwrap();
        assert!((b.x_hat - s.threshold()).abs() < 1e-15);
        assert!(matches!(
            quantile_weissman(&s, 0.6, &hill(&s)),
            Err(TailError::TailProbability { .. })
        ));
    }

    #[test]
    fn dhmz_toy() {
        let q = quantile_dhmz(&toy(), 0.1, -1.0).unwrap();
        assert!((q.gamma_hat - 1.0 / 6.0).abs() < 1e-13);
        assert!((q.correction_factor - (1.0 + 8.0 / 3.0 * 0.8)).abs() < 1e-13);
        assert!((q.x_hat - 11.137_714_509_015_632).abs() < 1e-11);
        assert!(q.warning.is_none());
        assert!(quantile_dhmz(&toy(), 0.5, -1.0).is_err());
    }

    #[test]
    fn dhmz_collapses_to_weissman_under_moment_identity() {
        let s = build_tail_sample(&[1.0, 1.0, 1.0, 1.0, E.powi(2)], 2).unwrap();
        let q = quantile_dhmz(&s, 0.05, -0.7).unwrap();
        let w = quantile_weissman(&s, 0.05, &hill(&s)).unwrap();
        assert!((q.correction_factor - 1.0).abs() < 1e-14);
        assert!((q.x_hat - w.x_hat).abs() < 1e-12 * w.x_hat);
    }

    #[test]
    fn unbiased_refuses_flagged_gamma() {
        let s = toy();
        let g = gamma_optimal_unbiased(&s, -1.0).unwrap();
        assert_eq!(
            quantile_unbiased(&s, 0.1, -1.0, &g).unwrap_err(),
            TailError::NonPositiveGamma(g.gamma_hat)
        );
    }

    #[test]
    fn unbiased_collapses_when_a_hat_vanishes() {
        // Spacings (1, 0) with k = 2: Hill and K_{2,-1} both give 1/2.
        let s = build_tail_sample(&[1.0, 2.0, 2.0, 2.0 * E], 2).unwrap();
        assert_eq!(s.top_log()[1], 0.0);
        let g = gamma_optimal_unbiased(&s, -1.0).unwrap();
        let q = quantile_unbiased(&s, 0.1, -1.0, &g).unwrap();
        let w = quantile_weissman(&s, 0.1, &g).unwrap();
        assert_eq!(q.correction_factor, 1.0);
        assert!((q.x_hat - w.x_hat).abs() < 1e-12 * w.x_hat);
    }

    #[test]
    fn p_domain() {
        let s = toy();
        let g = hill(&s);
        for p in [0.0, -0.1, 0.5, 0.7] {
            assert!(quantile_unbiased(&s, p, -1.0, &g).is_err(), "p = {p}");
        }
    }
}
