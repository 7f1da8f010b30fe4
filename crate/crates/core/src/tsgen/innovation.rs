use rand::Rng;
use rand_distr::{Distribution, Open01, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TailError};

/// Marginal law of the i.i.d. innovations driving the simulation models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InnovationLaw {
    /// Two-sided law with unit-Fréchet tails: `P(eps > x) = q (1 - exp(-1/x))`
    /// for `x > 0` and `P(eps < -x) = (1 - q)(1 - exp(-1/x))`.
    FrechetMixture { q: f64 },
    /// Student-t with `nu` degrees of freedom rescaled to unit variance.
    StudentT { nu: f64 },
}

impl InnovationLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InnovationLaw::FrechetMixture { q } if !(q > 0.0 && q < 1.0) => Err(
                TailError::InvalidModel(format!("frechet mixture weight q = {q} outside (0, 1)")),
            ),
            InnovationLaw::StudentT { nu } if !(nu > 2.0 && nu.is_finite()) => Err(
                TailError::InvalidModel(format!("student-t needs nu > 2 for unit variance, got {nu}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Inverse distribution function of the Fréchet mixture. `u = 1 - q` belongs
/// to the negative branch.
pub fn frechet_mixture_quantile(u: f64, q: f64) -> f64 {
    if u > 1.0 - q {
        -1.0 / ((u - 1.0 + q) / q).ln()
    } else {
        1.0 / (1.0 - u / (1.0 - q)).ln()
    }
}

/// Anything that yields successive innovations.
pub trait InnovationSource {
    fn next_innovation(&mut self) -> f64;
}

/// Innovations drawn from an [`InnovationLaw`] with a given generator.
pub struct LawSampler<R> {
    rng: R,
    kind: SamplerKind,
}

enum SamplerKind {
    Frechet { q: f64 },
    Student { dist: StudentT<f64>, scale: f64 },
}

impl<R: Rng> LawSampler<R> {
    pub fn new(law: InnovationLaw, rng: R) -> Result<Self> {
        law.validate()?;
        let kind = match law {
            InnovationLaw::FrechetMixture { q } => SamplerKind::Frechet { q },
            InnovationLaw::StudentT { nu } => SamplerKind::Student {
                dist: StudentT::new(nu).map_err(|e| TailError::InvalidModel(e.to_string()))?,
                scale: ((nu - 2.0) / nu).sqrt(),
            },
        };
        Ok(Self { rng, kind })
    }
}

impl<R: Rng> InnovationSource for LawSampler<R> {
    fn next_innovation(&mut self) -> f64 {
        match &self.kind {
            SamplerKind::Frechet { q } => {
                let u: f64 = Open01.sample(&mut self.rng);
                frechet_mixture_quantile(u, *q)
            }
            SamplerKind::Student { dist, scale } => dist.sample(&mut self.rng) * scale,
        }
    }
}

/// Replays a fixed script of innovations, cycling when exhausted.
#[derive(Debug, Clone)]
pub struct ScriptedInnovations {
    values: Vec<f64>,
    pos: usize,
}

impl ScriptedInnovations {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "script must not be empty");
        Self { values, pos: 0 }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }
}

impl InnovationSource for ScriptedInnovations {
    fn next_innovation(&mut self) -> f64 {
        let v = self.values[self.pos % self.values.len()];
        self.pos += 1;
        v
    }
}

/// One innovation from `law` using `rng`.
pub fn sample_innovation<R: Rng>(law: InnovationLaw, rng: &mut R) -> Result<f64> {
    Ok(LawSampler::new(law, rng)?.next_innovation())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tsgen::SeededStream;

    #[test]
    fn inversion_values() {
        // (u - 1 + q) / q = 0.8333...
        assert!((frechet_mixture_quantile(0.875, 0.75) - 5.484_814_947_747_078).abs() < 1e-12);
        // (u - 1 + q) / q = 1/2
        assert!((frechet_mixture_quantile(0.625, 0.75) - 1.0 / 2f64.ln()).abs() < 1e-12);
        assert!((frechet_mixture_quantile(0.1, 0.75) - -1.957_615_188_971_217_4).abs() < 1e-12);
        let b = frechet_mixture_quantile(0.25, 0.75);
        assert!(b <= 0.0 && b.is_sign_negative());
    }

    #[test]
    fn invalid_laws() {
        assert!(InnovationLaw::FrechetMixture { q: 1.0 }.validate().is_err());
        assert!(InnovationLaw::StudentT { nu: 2.0 }.validate().is_err());
        assert!(InnovationLaw::StudentT { nu: 5.99 }.validate().is_ok());
    }

    #[test]
    fn frechet_tail_weight() {
        // P(eps > x) x -> q; at x = 200 the exact value is q x (1 - e^{-1/x}).
        let mut s = LawSampler::new(InnovationLaw::FrechetMixture { q: 0.75 }, SeededStream::new(11).rng()).unwrap();
        let n = 4_000_000;
        let x = 200.0;
        let hits = (0..n).filter(|_| s.next_innovation() > x).count();
        let est = hits as f64 / n as f64 * x;
        let exact = 0.75 * x * (1.0 - (-1.0f64 / x).exp());
        // binomial sd of est is about sqrt(q x / n) ~ 0.006
        assert!((est - exact).abs() < 0.03, "{est} vs {exact}");
    }

    #[test]
    fn student_unit_variance() {
        let mut s = LawSampler::new(InnovationLaw::StudentT { nu: 8.0 }, SeededStream::new(5).rng()).unwrap();
        let n = 2_000_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let e = s.next_innovation();
            s1 += e;
            s2 += e * e;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!((var - 1.0).abs() < 0.01, "{var}");
    }
}
