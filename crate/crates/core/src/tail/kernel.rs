//! Weight functions on `(0, 1)` for the kernel tail-index estimators.
//!
//! Every kernel integrates to one and is bounded by `M t^(-tau)` with
//! `tau < 1/2`, so `t K(t) -> 0` at the origin.

use serde::{Deserialize, Serialize};
use libm::tgamma as gamma;

use crate::error::{Result, TailError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Kernel {
    /// `(1 + nu) t^nu`; `nu = 0` gives the Hill estimator.
    Power { nu: f64 },
    /// `(-log t)^nu / Gamma(1 + nu)`.
    LogWeight { nu: f64 },
    /// `K_{2,rho}(t) = (1 - rho) t^(-rho)`.
    SecondOrder { rho: f64 },
    /// The bias-cancelling, variance-minimising mixture of the constant
    /// kernel and `K_{2,rho}` with weight `((1 - rho) / rho)^2`.
    OptimalMixture { rho: f64 },
}

impl Kernel {
    pub const HILL: Kernel = Kernel::Power { nu: 0.0 };

    pub fn power(nu: f64) -> Result<Self> {
        Kernel::Power { nu }.validated()
    }

    pub fn log_weight(nu: f64) -> Result<Self> {
        Kernel::LogWeight { nu }.validated()
    }

    pub fn second_order(rho: f64) -> Result<Self> {
        Kernel::SecondOrder { rho }.validated()
    }

    pub fn optimal_mixture(rho: f64) -> Result<Self> {
        Kernel::OptimalMixture { rho }.validated()
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Power { nu } | Kernel::LogWeight { nu } => {
                if !(nu.is_finite() && nu >= 0.0) {
                    return Err(TailError::InvalidKernel(format!(
                        "nu must be finite and >= 0, got {nu}"
                    )));
                }
            }
            Kernel::SecondOrder { rho } | Kernel::OptimalMixture { rho } => {
                if !rho.is_finite() {
                    return Err(TailError::InvalidKernel(format!("rho = {rho}")));
                }
                if rho >= 0.0 {
                    return Err(TailError::NonNegativeRho(rho));
                }
            }
        }
        Ok(())
    }

    fn validated(self) -> Result<Self> {
        self.validate().map(|_| self)
    }

    /// `K(t)` for `t` in `(0, 1]`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.validate()?;
        if !(t > 0.0 && t <= 1.0) {
            return Err(TailError::OutsideUnitInterval(t));
        }
        Ok(self.value(t))
    }

    pub(crate) fn value(&self, t: f64) -> f64 {
        match *self {
            Kernel::Power { nu } => (1.0 + nu) * t.powf(nu),
            Kernel::LogWeight { nu } => (-t.ln()).powf(nu) / gamma(1.0 + nu),
            Kernel::SecondOrder { rho } => (1.0 - rho) * t.powf(-rho),
            Kernel::OptimalMixture { rho } => {
                let r = (1.0 - rho) / rho;
                r * r - (1.0 - rho) * (1.0 - 2.0 * rho) / (rho * rho) * t.powf(-rho)
            }
        }
    }

    /// `t K(t)` with the convention `0 * K(0) = 0`.
    pub(crate) fn t_times_value(&self, t: f64) -> f64 {
        if t == 0.0 {
            0.0
        } else {
            t * self.value(t)
        }
    }

    /// Density of the integrating measure, `d(t K(t)) / dt = K(t) + t K'(t)`.
    pub(crate) fn measure_density(&self, t: f64) -> f64 {
        match *self {
            Kernel::Power { nu } => (1.0 + nu) * (1.0 + nu) * t.powf(nu),
            Kernel::LogWeight { nu } => {
                if nu == 0.0 {
                    return 1.0;
                }
                let l = -t.ln();
                (l.powf(nu) - nu * l.powf(nu - 1.0)) / gamma(1.0 + nu)
            }
            Kernel::SecondOrder { rho } => (1.0 - rho) * (1.0 - rho) * t.powf(-rho),
            Kernel::OptimalMixture { rho } => {
                let delta = mixture_weight(rho);
                delta + (1.0 - delta) * (1.0 - rho) * (1.0 - rho) * t.powf(-rho)
            }
        }
    }

    /// Increments of `t K(t)` over the grid `i / k`: the exact weights that
    /// turn the integral over the empirical tail quantile function into a sum
    /// over log-spacings. They telescope to `K(1)`.
    pub fn weights(&self, k: usize) -> Result<Vec<f64>> {
        self.validate()?;
        let kf = k as f64;
        let mut prev = 0.0;
        Ok((1..=k)
            .map(|i| {
                let cur = self.t_times_value(i as f64 / kf);
                let w = cur - prev;
                prev = cur;
                w
            })
            .collect())
    }

    /// The `rho` the kernel is tuned to, if any.
    pub fn rho(&self) -> Option<f64> {
        match *self {
            Kernel::SecondOrder { rho } | Kernel::OptimalMixture { rho } => Some(rho),
            _ => None,
        }
    }
}

/// Weight on the constant kernel in the optimal mixture, `((1 - rho) / rho)^2`.
pub fn mixture_weight(rho: f64) -> f64 {
    let r = (1.0 - rho) / rho;
    r * r
}

impl std::fmt::Display for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kernel::Power { nu } => write!(f, "power(nu={nu})"),
            Kernel::LogWeight { nu } => write!(f, "log_weight(nu={nu})"),
            Kernel::SecondOrder { rho } => write!(f, "second_order(rho={rho})"),
            Kernel::OptimalMixture { rho } => write!(f, "optimal_mixture(rho={rho})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_unit, QuadratureOptions};

    fn grid() -> Vec<Kernel> {
        let mut ks = vec![];
        for nu in [0.0, 0.5, 1.0, 2.0, 3.5] {
            ks.push(Kernel::power(nu).unwrap());
            ks.push(Kernel::log_weight(nu).unwrap());
        }
        for rho in [-0.1, -0.25, -0.5, -1.0, -2.0, -3.0] {
            ks.push(Kernel::second_order(rho).unwrap());
            ks.push(Kernel::optimal_mixture(rho).unwrap());
        }
        ks
    }

    #[test]
    fn point_values() {
        assert_eq!(Kernel::power(0.0).unwrap().eval(0.5).unwrap(), 1.0);
        assert!((Kernel::optimal_mixture(-1.0).unwrap().eval(1.0).unwrap() + 2.0).abs() < 1e-15);
        assert!((Kernel::second_order(-1.0).unwrap().eval(0.5).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let k = Kernel::HILL;
        assert_eq!(k.eval(0.0).unwrap_err(), TailError::OutsideUnitInterval(0.0));
        assert_eq!(k.eval(1.5).unwrap_err(), TailError::OutsideUnitInterval(1.5));
        assert_eq!(Kernel::second_order(0.0).unwrap_err(), TailError::NonNegativeRho(0.0));
        assert_eq!(Kernel::optimal_mixture(0.3).unwrap_err(), TailError::NonNegativeRho(0.3));
        assert!(Kernel::power(-0.1).is_err());
        assert!(Kernel::SecondOrder { rho: 1.0 }.eval(0.5).is_err());
    }

    #[test]
    fn weights_examples() {
        assert_eq!(Kernel::HILL.weights(4).unwrap(), vec![0.25; 4]);
        let w = Kernel::second_order(-1.0).unwrap().weights(2).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 1.5).abs() < 1e-15);
        for k in grid() {
            let w = k.weights(1).unwrap();
            assert_eq!(w.len(), 1);
            assert!((w[0] - k.value(1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn weights_telescope_to_k_at_one() {
        for kern in grid() {
            for k in 1..=500 {
                let s: f64 = kern.weights(k).unwrap().iter().sum();
                let target = kern.value(1.0);
                assert!(
                    (s - target).abs() <= 1e-12 * target.abs().max(1.0),
                    "{kern} k={k}: {s} vs {target}"
                );
            }
        }
    }

    #[test]
    fn kernels_integrate_to_one() {
        let opts = QuadratureOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-13,
            ..Default::default()
        };
        for kern in grid() {
            let v = integrate_unit(|t| kern.value(t), opts).unwrap();
            assert!((v - 1.0).abs() < 1e-9, "{kern}: {v}");
        }
    }

    #[test]
    fn measure_density_matches_finite_differences() {
        for kern in grid() {
            for &t in &[0.1, 0.3, 0.7, 0.9] {
                let h = 1e-6;
                let fd = (kern.t_times_value(t + h) - kern.t_times_value(t - h)) / (2.0 * h);
                let d = kern.measure_density(t);
                assert!((fd - d).abs() < 1e-6 * d.abs().max(1.0), "{kern} t={t}");
            }
        }
    }

    #[test]
    fn mixture_decomposition() {
        for rho in [-0.25, -0.5, -1.0, -2.0] {
            let d = mixture_weight(rho);
            let opt = Kernel::optimal_mixture(rho).unwrap();
            let k2 = Kernel::second_order(rho).unwrap();
            for &t in &[0.05, 0.5, 1.0] {
                let lhs = opt.value(t);
                let rhs = d + (1.0 - d) * k2.value(t);
                assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
            }
        }
    }
}
