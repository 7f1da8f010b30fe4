//! Simulation of the i.i.d., AR(1), MA(1) and GARCH reference models and
//! Monte Carlo evaluation of their true extreme quantiles.

mod benchmark;
mod config;
mod innovation;
mod model;
mod stream;
mod truth;

pub use benchmark::{benchmark_model, benchmark_models, BenchmarkModel, BENCHMARK_P};
pub use config::{parse_key_value, ModelConfig, ValueKind, DEFAULT_FRECHET_Q};
pub use innovation::{
    frechet_mixture_quantile, sample_innovation, InnovationLaw, InnovationSource, LawSampler,
    ScriptedInnovations,
};
pub use model::{generate, generate_with, ModelKind, ModelSpec, DEFAULT_BURN_IN};
pub use stream::SeededStream;
pub use truth::{
    empirical_upper_quantile, true_quantile_mc, true_quantile_mc_with_budget, TrueQuantile,
    DEFAULT_DRAW_BUDGET,
};
