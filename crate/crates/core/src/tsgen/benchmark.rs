use serde::Serialize;

use super::innovation::InnovationLaw;
use super::model::{ModelKind, ModelSpec};
use crate::error::{Result, TailError};

/// One of the five reference simulation models together with its published
/// `x_0.001` and the series length used in the bias study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkModel {
    pub id: u8,
    pub spec: ModelSpec,
    pub series_len: usize,
    pub true_quantile: f64,
    pub reference_gamma: f64,
}

pub const BENCHMARK_P: f64 = 0.001;

pub fn benchmark_model(id: u8) -> Result<BenchmarkModel> {
    let frechet = InnovationLaw::FrechetMixture { q: 0.75 };
    let (kind, innovation, series_len, true_quantile, reference_gamma) = match id {
        1 => (ModelKind::Iid, frechet, 1000, 749.80, 1.0),
        2 => (ModelKind::Ar1 { theta: 0.3 }, frechet, 1000, 1072.26, 1.0),
        3 => (ModelKind::Ma1 { theta: 0.3 }, frechet, 1000, 972.85, 1.0),
        4 => (
            ModelKind::Garch { alpha0: 4.49e-6, alpha: vec![0.195], beta: vec![0.746] },
            InnovationLaw::StudentT { nu: 5.99 },
            1000,
            0.049,
            0.27,
        ),
        5 => (
            ModelKind::Garch { alpha0: 0.0443, alpha: vec![0.202], beta: vec![0.213, 0.467] },
            InnovationLaw::StudentT { nu: 5.66 },
            4000,
            3.103,
            0.15,
        ),
        _ => return Err(TailError::InvalidModel(format!("no benchmark model {id} (expected 1..=5)"))),
    };
    Ok(BenchmarkModel {
        id,
        spec: ModelSpec::new(kind, innovation),
        series_len,
        true_quantile,
        reference_gamma,
    })
}

pub fn benchmark_models() -> Vec<BenchmarkModel> {
    (1..=5).map(|id| benchmark_model(id).expect("ids 1..=5 exist")).collect()
}
