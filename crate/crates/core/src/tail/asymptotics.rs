//! Closed-form and quadrature values of the asymptotic bias and variance
//! constants of the kernel estimators, and the tail covariance functions of
//! the AR(1) and MA(1) models.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use super::kernel::{mixture_weight, Kernel};
use crate::error::{Result, TailError};
use crate::quadrature::{integrate, integrate_unit, QuadratureOptions};

/// Serial dependence structures with an explicit tail covariance `r(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dependence {
    Iid,
    Ar1 { theta: f64 },
    Ma1 { theta: f64 },
}

impl Dependence {
    fn validate(&self) -> Result<()> {
        match *self {
            Dependence::Iid => Ok(()),
            Dependence::Ar1 { theta } | Dependence::Ma1 { theta } => {
                if theta > 0.0 && theta < 1.0 {
                    Ok(())
                } else {
                    Err(TailError::InvalidModel(format!("theta = {theta} outside (0, 1)")))
                }
            }
        }
    }
}

// Below this a term of the geometric tail is treated as negligible when
// choosing quadrature breakpoints.
const SERIES_EPS: f64 = 1e-14;

/// Tail covariance `r(x, y)` for the given dependence structure.
///
/// The AR(1) series is summed term by term until both minima have entered
/// their geometric regime; the remainder is then added in closed form.
pub fn covariance_r(model: Dependence, gamma: f64, x: f64, y: f64) -> Result<f64> {
    model.validate()?;
    if !(gamma > 0.0) {
        return Err(TailError::InvalidModel(format!("gamma = {gamma} must be positive")));
    }
    let base = x.min(y);
    if base <= 0.0 {
        return Ok(0.0);
    }
    Ok(match model {
        Dependence::Iid => base,
        Dependence::Ar1 { theta } => {
            let a = theta.powf(1.0 / gamma);
            let mut sum = base;
            let mut am = a;
            loop {
                // In the geometric regime both minima equal the scaled argument.
                if y * am <= x && x * am <= y {
                    sum += (x + y) * am / (1.0 - a);
                    break;
                }
                sum += x.min(y * am) + y.min(x * am);
                am *= a;
                if am < f64::MIN_POSITIVE {
                    break;
                }
            }
            sum
        }
        Dependence::Ma1 { theta } => {
            let a = theta.powf(1.0 / gamma);
            base + (x.min(y * a) + y.min(x * a)) / (1.0 + a)
        }
    })
}

/// Asymptotic bias constant `AB(K) = int_0^1 t^(-rho) K(t) dt`.
pub fn ab_kernel(kernel: &Kernel, rho: f64) -> Result<f64> {
    kernel.validate()?;
    if !(rho < 0.0) {
        return Err(TailError::NonNegativeRho(rho));
    }
    integrate_unit(|t| t.powf(-rho) * kernel.value(t), tight())
}

/// Bias constant of the optimal mixture tuned to `rho_tilde` when the true
/// parameter is `rho`; zero when they agree.
pub fn ab_optimal_misspecified(rho_tilde: f64, rho: f64) -> f64 {
    (1.0 - rho_tilde) * (rho_tilde - rho) / (rho_tilde * (1.0 - rho) * (1.0 - rho_tilde - rho))
}

fn tight() -> QuadratureOptions {
    QuadratureOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_intervals: 4000,
    }
}

/// Asymptotic variance of a kernel estimator for independent data,
/// `gamma^2 { int int min(s,t)/(ts) d(tK(t)) d(sK(s)) - K(1)^2 }`,
/// evaluated by nested quadrature.
pub fn av_iid(kernel: &Kernel, gamma: f64) -> Result<f64> {
    kernel.validate()?;
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let inner_opts = tight();
    let failure = RefCell::new(None);
    let outer = |t: f64| -> f64 {
        // s < t contributes (1/t) int_0^t dg; s > t contributes int_t^1 dg / s,
        // the latter integrated in log s.
        let below = integrate(|s| kernel.measure_density(s), 0.0, t, inner_opts);
        let above = integrate(|w| kernel.measure_density(w.exp()), t.ln(), 0.0, inner_opts);
        match (below, above) {
            (Ok(b), Ok(a)) => kernel.measure_density(t) * (b / t + a),
            (Err(e), _) | (_, Err(e)) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let total = integrate_unit(
        outer,
        QuadratureOptions {
            abs_tol: 1e-11,
            rel_tol: 1e-11,
            max_intervals: 2000,
        },
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let k1 = kernel.value(1.0);
    Ok(gamma * gamma * (total? - k1 * k1))
}

/// General asymptotic variance
/// `gamma^2 int int [r(t,s)/(ts) - r(t,1)/t - r(1,s)/s + r(1,1)] d(tK(t)) d(sK(s))`
/// for the given dependence structure, by nested quadrature split at the kinks
/// of `r`.
pub fn av_kernel(kernel: &Kernel, gamma: f64, model: Dependence) -> Result<f64> {
    kernel.validate()?;
    model.validate()?;
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let r = |x: f64, y: f64| covariance_r(model, gamma, x, y).expect("validated");
    let r11 = r(1.0, 1.0);
    let a = match model {
        Dependence::Iid => None,
        Dependence::Ar1 { theta } | Dependence::Ma1 { theta } => Some(theta.powf(1.0 / gamma)),
    };
    let max_power = match model {
        Dependence::Ar1 { .. } => usize::MAX,
        _ => 1,
    };
    let powers = |scale: f64, out: &mut Vec<f64>| {
        if let Some(a) = a {
            let mut am = a;
            let mut m = 1;
            while am * scale > SERIES_EPS && m <= max_power {
                out.push(am * scale);
                out.push(scale / am);
                am *= a;
                m += 1;
            }
        }
    };
    let opts = QuadratureOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-11,
        max_intervals: 2000,
    };
    let failure = RefCell::new(None);
    let mut outer_breaks = vec![];
    powers(1.0, &mut outer_breaks);
    let outer = |t: f64| -> f64 {
        let rt1 = r(t, 1.0) / t;
        let mut breaks = vec![t];
        powers(t, &mut breaks);
        powers(1.0, &mut breaks);
        let integrand = |s: f64| {
            (r(t, s) / (t * s) - rt1 - r(1.0, s) / s + r11) * kernel.measure_density(s)
        };
        match integrate_breaks(integrand, &breaks, opts) {
            Ok(v) => kernel.measure_density(t) * v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let total = integrate_breaks(outer, &outer_breaks, opts);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(gamma * gamma * total?)
}

/// Integrates over `(0, 1)` piecewise between the given interior breakpoints.
fn integrate_breaks<F: Fn(f64) -> f64>(f: F, breaks: &[f64], opts: QuadratureOptions) -> Result<f64> {
    let mut pts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&b| b > SERIES_EPS && b < 1.0)
        .collect();
    pts.push(0.0);
    pts.push(1.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut sum = 0.0;
    for w in pts.windows(2) {
        sum += if w[0] == 0.0 {
            // t = w1 u^2 on the innermost piece
            let h = w[1];
            integrate(|u| 2.0 * h * u * f(h * u * u), 0.0, 1.0, opts)?
        } else {
            integrate(&f, w[0], w[1], opts)?
        };
    }
    Ok(sum)
}

/// Asymptotic variances of the optimal unbiased estimator and of the Hill-type
/// bias-corrected competitor under the same dependence structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceComparison {
    pub r11: f64,
    pub optimal: f64,
    pub competitor: f64,
}

pub fn av_dependent_optimal(model: Dependence, gamma: f64, rho: f64) -> Result<VarianceComparison> {
    model.validate()?;
    if !(rho < 0.0) {
        return Err(TailError::NonNegativeRho(rho));
    }
    if gamma == 0.0 {
        return Ok(VarianceComparison {
            r11: 1.0,
            optimal: 0.0,
            competitor: 0.0,
        });
    }
    let r11 = covariance_r(model, gamma, 1.0, 1.0)?;
    let g2 = gamma * gamma;
    let optimal = g2 * mixture_weight(rho) * r11;
    let cross = match model {
        Dependence::Iid => 0.0,
        Dependence::Ar1 { theta } => {
            let a = theta.powf(1.0 / gamma);
            a * a.ln() / ((1.0 - a) * (1.0 - a))
        }
        Dependence::Ma1 { theta } => {
            let a = theta.powf(1.0 / gamma);
            a * a.ln() / (1.0 + a)
        }
    };
    let competitor = g2 / (rho * rho)
        * (((1.0 - rho).powi(2) + rho * rho) * r11 + 2.0 * rho * (1.0 - rho) * cross);
    Ok(VarianceComparison {
        r11,
        optimal,
        competitor,
    })
}
