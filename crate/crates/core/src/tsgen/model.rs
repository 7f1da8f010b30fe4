use serde::{Deserialize, Serialize};

use super::innovation::{InnovationLaw, InnovationSource, LawSampler};
use super::stream::SeededStream;
use crate::error::{Result, TailError};

pub const DEFAULT_BURN_IN: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// `X_i = eps_i`.
    Iid,
    /// `X_i = theta X_{i-1} + eps_i`.
    Ar1 { theta: f64 },
    /// `X_i = theta eps_{i-1} + eps_i`.
    Ma1 { theta: f64 },
    /// `X_t = sigma_t eps_t`,
    /// `sigma_t^2 = alpha0 + sum_j alpha_j X_{t-j}^2 + sum_k beta_k sigma_{t-k}^2`.
    Garch {
        alpha0: f64,
        alpha: Vec<f64>,
        beta: Vec<f64>,
    },
}

/// Generative description of a simulated series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub innovation: InnovationLaw,
    pub burn_in: usize,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, innovation: InnovationLaw) -> Self {
        Self {
            kind,
            innovation,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.innovation.validate()?;
        match &self.kind {
            ModelKind::Iid => Ok(()),
            ModelKind::Ar1 { theta } | ModelKind::Ma1 { theta } => {
                if *theta > 0.0 && *theta < 1.0 {
                    Ok(())
                } else {
                    Err(TailError::InvalidModel(format!("theta = {theta} outside (0, 1)")))
                }
            }
            ModelKind::Garch { alpha0, alpha, beta } => {
                if alpha.is_empty() {
                    return Err(TailError::InvalidModel("garch needs at least one alpha".into()));
                }
                let all = std::iter::once(alpha0).chain(alpha).chain(beta);
                if let Some(bad) = all.into_iter().find(|c| !(**c > 0.0 && c.is_finite())) {
                    return Err(TailError::InvalidModel(format!(
                        "garch coefficients must be positive, got {bad}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Non-fatal issues, e.g. a GARCH persistence `sum alpha + sum beta >= 1`.
    pub fn warnings(&self) -> Vec<String> {
        match &self.kind {
            ModelKind::Garch { alpha, beta, .. } => {
                let persistence: f64 = alpha.iter().chain(beta).sum();
                if persistence >= 1.0 {
                    vec![format!(
                        "garch persistence {persistence} >= 1: not covariance stationary"
                    )]
                } else {
                    vec![]
                }
            }
            _ => vec![],
        }
    }

    /// Unconditional variance of a covariance-stationary GARCH model.
    pub fn garch_unconditional_variance(&self) -> Option<f64> {
        match &self.kind {
            ModelKind::Garch { alpha0, alpha, beta } => {
                let persistence: f64 = alpha.iter().chain(beta).sum();
                (persistence < 1.0).then(|| alpha0 / (1.0 - persistence))
            }
            _ => None,
        }
    }
}

/// Runs the model recursion on innovations supplied by `source`.
pub fn generate_with<S: InnovationSource + ?Sized>(
    spec: &ModelSpec,
    n: usize,
    source: &mut S,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(n);
    match &spec.kind {
        ModelKind::Iid => {
            out.extend((0..n).map(|_| source.next_innovation()));
        }
        ModelKind::Ar1 { theta } => {
            let mut x = 0.0;
            for _ in 0..spec.burn_in {
                x = theta * x + source.next_innovation();
            }
            for _ in 0..n {
                x = theta * x + source.next_innovation();
                out.push(x);
            }
        }
        ModelKind::Ma1 { theta } => {
            let mut prev = source.next_innovation();
            for _ in 0..n {
                let e = source.next_innovation();
                out.push(theta * prev + e);
                prev = e;
            }
        }
        ModelKind::Garch { alpha0, alpha, beta } => {
            let init = spec.garch_unconditional_variance().unwrap_or(*alpha0);
            // Ring buffers, most recent lag at index `head`.
            let mut x2 = vec![init; alpha.len()];
            let mut s2 = vec![init; beta.len().max(1)];
            let (mut hx, mut hs) = (0usize, 0usize);
            for t in 0..spec.burn_in + n {
                let mut sigma2 = *alpha0;
                for (j, a) in alpha.iter().enumerate() {
                    sigma2 += a * x2[(hx + j) % x2.len()];
                }
                for (j, b) in beta.iter().enumerate() {
                    sigma2 += b * s2[(hs + j) % s2.len()];
                }
                let x = sigma2.sqrt() * source.next_innovation();
                hx = (hx + x2.len() - 1) % x2.len();
                x2[hx] = x * x;
                hs = (hs + s2.len() - 1) % s2.len();
                s2[hs] = sigma2;
                if t >= spec.burn_in {
                    out.push(x);
                }
            }
        }
    }
    Ok(out)
}

/// Simulates `n` observations; identical `(spec, n, stream)` give identical series.
pub fn generate(spec: &ModelSpec, n: usize, stream: &SeededStream) -> Result<Vec<f64>> {
    let mut sampler = LawSampler::new(spec.innovation, stream.rng())?;
    generate_with(spec, n, &mut sampler)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tsgen::innovation::ScriptedInnovations;

    fn frechet() -> InnovationLaw {
        InnovationLaw::FrechetMixture { q: 0.75 }
    }

    #[test]
    fn zero_innovations_give_zero_ar() {
        let spec = ModelSpec::new(ModelKind::Ar1 { theta: 0.6 }, frechet());
        let xs = generate_with(&spec, 50, &mut ScriptedInnovations::constant(0.0)).unwrap();
        assert!(xs.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn ma1_hand_recursion() {
        let spec = ModelSpec::new(ModelKind::Ma1 { theta: 0.3 }, frechet());
        let xs = generate_with(&spec, 1, &mut ScriptedInnovations::new(vec![1.0, 1.0])).unwrap();
        assert!((xs[0] - 1.3).abs() < 1e-15);
        let xs = generate_with(&spec, 3, &mut ScriptedInnovations::new(vec![1.0, 2.0, -1.0, 0.5])).unwrap();
        assert_eq!(xs, vec![0.3 + 2.0, 0.6 - 1.0, -0.3 + 0.5]);
    }

    #[test]
    fn ar1_burn_in_and_recursion() {
        let mut spec = ModelSpec::new(ModelKind::Ar1 { theta: 0.5 }, frechet());
        spec.burn_in = 0;
        let xs = generate_with(&spec, 3, &mut ScriptedInnovations::new(vec![1.0, 0.0, 2.0])).unwrap();
        assert_eq!(xs, vec![1.0, 0.5, 2.25]);
    }

    #[test]
    fn garch_scripted() {
        let mut spec = ModelSpec::new(
            ModelKind::Garch { alpha0: 0.1, alpha: vec![0.2], beta: vec![0.3, 0.1] },
            InnovationLaw::StudentT { nu: 6.0 },
        );
        spec.burn_in = 0;
        let xs = generate_with(&spec, 3, &mut ScriptedInnovations::new(vec![1.0, -2.0, 0.5])).unwrap();
        let v: f64 = 0.1 / (1.0 - 0.6);
        let s1: f64 = 0.1 + 0.2 * v + 0.3 * v + 0.1 * v;
        let x1 = s1.sqrt();
        let s2: f64 = 0.1 + 0.2 * x1 * x1 + 0.3 * s1 + 0.1 * v;
        let x2 = -2.0 * s2.sqrt();
        let s3: f64 = 0.1 + 0.2 * x2 * x2 + 0.3 * s2 + 0.1 * s1;
        let x3 = 0.5 * s3.sqrt();
        for (a, b) in xs.iter().zip([x1, x2, x3]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_specs() {
        let bad = ModelSpec::new(ModelKind::Ar1 { theta: 1.0 }, frechet());
        assert!(generate(&bad, 10, &SeededStream::new(1)).is_err());
        let bad = ModelSpec::new(
            ModelKind::Garch { alpha0: 0.1, alpha: vec![0.2], beta: vec![-0.1] },
            frechet(),
        );
        assert!(bad.validate().is_err());
        let explosive = ModelSpec::new(
            ModelKind::Garch { alpha0: 0.1, alpha: vec![0.6], beta: vec![0.5] },
            frechet(),
        );
        assert!(explosive.validate().is_ok());
        assert_eq!(explosive.warnings().len(), 1);
        assert!(explosive.garch_unconditional_variance().is_none());
    }

    #[test]
    fn deterministic() {
        let spec = ModelSpec::new(ModelKind::Ar1 { theta: 0.3 }, frechet());
        let a = generate(&spec, 500, &SeededStream::new(9)).unwrap();
        let b = generate(&spec, 500, &SeededStream::new(9)).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = generate(&spec, 500, &SeededStream::new(10)).unwrap();
        assert_ne!(a, c);
    }
}
