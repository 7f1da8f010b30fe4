//! ABias / RMSE of extreme quantile estimators versus `k` over simulated series.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TailError};
use crate::io::fmt_opt;
use crate::tail::{
    gamma_optimal_unbiased, hill, quantile_dhmz, quantile_unbiased, quantile_weissman,
    xi_from_rho_hat, OrderStatistics, QuantileEstimate, TailSample,
};
use crate::tsgen::{
    benchmark_model, generate, parse_key_value, ModelConfig, ModelSpec, SeededStream, ValueKind,
};

pub const CANONICAL_XI: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Unbiased,
    Weissman,
    Dhmz,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Unbiased, Estimator::Weissman, Estimator::Dhmz];

    pub fn as_str(&self) -> &'static str {
        match self {
            Estimator::Unbiased => "unbiased",
            Estimator::Weissman => "weissman",
            Estimator::Dhmz => "dhmz",
        }
    }

    /// Evaluates the estimator on one tail sample. `xi` is the second-order
    /// parameter used by the corrected estimators.
    pub fn quantile(&self, sample: &TailSample, p: f64, xi: f64) -> Result<QuantileEstimate> {
        match self {
            Estimator::Unbiased => {
                let gamma = gamma_optimal_unbiased(sample, xi)?;
                quantile_unbiased(sample, p, xi, &gamma)
            }
            Estimator::Weissman => quantile_weissman(sample, p, &hill(sample)),
            Estimator::Dhmz => quantile_dhmz(sample, p, xi),
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = TailError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "unbiased" => Ok(Estimator::Unbiased),
            "weissman" => Ok(Estimator::Weissman),
            "dhmz" => Ok(Estimator::Dhmz),
            other => Err(TailError::Config(format!(
                "unknown estimator `{other}` (expected unbiased, weissman or dhmz)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    /// Label written to the `model` column.
    pub model: String,
    pub spec: ModelSpec,
    pub n: usize,
    pub replications: usize,
    pub p: f64,
    pub k_grid: Vec<usize>,
    pub estimators: Vec<Estimator>,
    pub x_p_true: f64,
    pub seed: u64,
    /// Used when no valid `rho_hat` exists in a replication.
    pub canonical_xi: f64,
}

/// `20, 40, ..., 600`.
pub fn default_k_grid() -> Vec<usize> {
    (1..=30).map(|i| 20 * i).collect()
}

impl StudyConfig {
    /// Study on reference model `id` at its published `x_0.001`.
    pub fn benchmark(id: u8, replications: usize, seed: u64) -> Result<Self> {
        let m = benchmark_model(id)?;
        Ok(StudyConfig {
            model: format!("model{id}"),
            spec: m.spec,
            n: m.series_len,
            replications,
            p: crate::tsgen::BENCHMARK_P,
            k_grid: default_k_grid(),
            estimators: Estimator::ALL.to_vec(),
            x_p_true: m.true_quantile,
            seed,
            canonical_xi: CANONICAL_XI,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let bad = |m: String| Err(TailError::Config(m));
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.k_grid.is_empty() || self.k_grid[0] == 0 {
            return bad("k_grid must be non-empty with k >= 1".into());
        }
        if self.k_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("k_grid must be strictly increasing".into());
        }
        let k_max = *self.k_grid.last().unwrap();
        if k_max >= self.n {
            return Err(TailError::KOutOfRange { k: k_max, n: self.n });
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(TailError::TailProbability { p: self.p, limit: 1.0 });
        }
        if !(self.x_p_true > 0.0 && self.x_p_true.is_finite()) {
            return bad(format!("x_p_true must be positive, got {}", self.x_p_true));
        }
        if self.estimators.is_empty() {
            return bad("at least one estimator is required".into());
        }
        let mut seen = self.estimators.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.estimators.len() {
            return bad("estimators must not repeat".into());
        }
        if !(self.canonical_xi < 0.0) {
            return Err(TailError::NonNegativeRho(self.canonical_xi));
        }
        Ok(())
    }
}

/// Limits checked before and during a run.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunLimits {
    pub max_replications: Option<usize>,
    pub deadline: Option<Instant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub estimator: Estimator,
    pub k: usize,
    /// `None` when every replication failed for this cell.
    pub abias: Option<f64>,
    pub rmse: Option<f64>,
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub model: String,
    pub replications: usize,
    /// Replications in which no valid `rho_hat` existed.
    pub xi_fallbacks: usize,
    pub cells: Vec<StudyCell>,
}

impl StudyResult {
    pub fn cell(&self, estimator: Estimator, k: usize) -> Option<&StudyCell> {
        self.cells.iter().find(|c| c.estimator == estimator && c.k == k)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| TailError::Config(format!("csv output: {e}"));
        w.write_record(["model", "estimator", "k", "abias", "rmse", "n_failed"]).map_err(io)?;
        for c in &self.cells {
            w.write_record([
                self.model.as_str(),
                c.estimator.as_str(),
                &c.k.to_string(),
                &fmt_opt(c.abias),
                &fmt_opt(c.rmse),
                &c.n_failed.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| TailError::Config(format!("csv output: {e}")))
    }
}

/// Ratios `x_hat / x_p` of one replication, laid out `[estimator][k]`.
struct Replication {
    ratios: Vec<Option<f64>>,
    fell_back: bool,
}

fn replicate(config: &StudyConfig, index: usize, root: &SeededStream) -> Result<Replication> {
    let series = generate(&config.spec, config.n, &root.split(index as u64))?;
    let stats = OrderStatistics::new(&series)?;
    let xi = xi_from_rho_hat(&stats, config.canonical_xi)?;
    let mut ratios = Vec::with_capacity(config.estimators.len() * config.k_grid.len());
    for est in &config.estimators {
        for &k in &config.k_grid {
            let ratio = stats
                .tail(k)
                .and_then(|s| est.quantile(&s, config.p, xi.xi))
                .ok()
                .filter(QuantileEstimate::is_usable)
                .map(|q| q.x_hat / config.x_p_true);
            ratios.push(ratio);
        }
    }
    Ok(Replication { ratios, fell_back: xi.fell_back })
}

/// Runs the study. Replication `i` draws from `SeededStream::new(seed).split(i)`
/// and sums are accumulated in replication order, so the output does not
/// depend on the thread count and a longer run extends a shorter one.
pub fn run_study(config: &StudyConfig) -> Result<StudyResult> {
    run_study_with_limits(config, RunLimits::default())
}

pub fn run_study_with_limits(config: &StudyConfig, limits: RunLimits) -> Result<StudyResult> {
    config.validate()?;
    if let Some(max) = limits.max_replications {
        if config.replications > max {
            return Err(TailError::BudgetExceeded {
                requested: config.replications as u128,
                budget: max as u128,
            });
        }
    }
    let root = SeededStream::new(config.seed);
    let cells = config.estimators.len() * config.k_grid.len();
    let mut sum = vec![0.0; cells];
    let mut sum_sq = vec![0.0; cells];
    let mut used = vec![0usize; cells];
    let mut xi_fallbacks = 0;

    // Chunks bound memory; each chunk is computed in parallel and folded in order.
    const CHUNK: usize = 256;
    let mut start = 0;
    while start < config.replications {
        if let Some(deadline) = limits.deadline {
            if Instant::now() > deadline {
                return Err(TailError::TimeBudgetExceeded { completed: start });
            }
        }
        let end = (start + CHUNK).min(config.replications);
        let reps = (start..end)
            .into_par_iter()
            .map(|i| replicate(config, i, &root))
            .collect::<Result<Vec<_>>>()?;
        for rep in reps {
            xi_fallbacks += usize::from(rep.fell_back);
            for (c, r) in rep.ratios.iter().enumerate() {
                if let Some(r) = r {
                    let d = r - 1.0;
                    sum[c] += d;
                    sum_sq[c] += d * d;
                    used[c] += 1;
                }
            }
        }
        start = end;
    }

    let mut out = Vec::with_capacity(cells);
    for (e, est) in config.estimators.iter().enumerate() {
        for (j, &k) in config.k_grid.iter().enumerate() {
            let c = e * config.k_grid.len() + j;
            let (abias, rmse) = if used[c] == 0 {
                (None, None)
            } else {
                let m = used[c] as f64;
                let abias = (sum[c] / m).abs();
                // Guards the last-ulp case where rounding would put rmse below abias.
                let rmse = (sum_sq[c] / m).sqrt().max(abias);
                (Some(abias), Some(rmse))
            };
            out.push(StudyCell {
                estimator: *est,
                k,
                abias,
                rmse,
                n_failed: config.replications - used[c],
            });
        }
    }
    Ok(StudyResult {
        model: config.model.clone(),
        replications: config.replications,
        xi_fallbacks,
        cells: out,
    })
}

/// ABias and RMSE of a set of ratios `x_hat / x_p`.
pub fn abias_rmse(ratios: &[f64]) -> Option<(f64, f64)> {
    if ratios.is_empty() {
        return None;
    }
    let m = ratios.len() as f64;
    let abias = (ratios.iter().map(|r| r - 1.0).sum::<f64>() / m).abs();
    let rmse = (ratios.iter().map(|r| (r - 1.0).powi(2)).sum::<f64>() / m).sqrt();
    Some((abias, rmse.max(abias)))
}

/// On-disk study description: either `benchmark = 1..5` or the model keys of
/// [`ModelConfig`], plus the study keys.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFile {
    pub benchmark: Option<u8>,
    pub label: Option<String>,
    pub kind: Option<String>,
    pub theta: Option<f64>,
    pub alpha0: Option<f64>,
    pub alpha: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub innovation: Option<String>,
    pub q: Option<f64>,
    pub nu: Option<f64>,
    pub burn_in: Option<usize>,
    pub n: Option<usize>,
    pub replications: Option<usize>,
    pub p: Option<f64>,
    /// `"20:600:20"`, `"20, 40, 60"` or a JSON array.
    pub k_grid: Option<ListOrText<usize>>,
    pub estimators: Option<ListOrText<String>>,
    pub x_p_true: Option<f64>,
    pub seed: Option<u64>,
    pub canonical_xi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ListOrText<T> {
    List(Vec<T>),
    Text(String),
}

const STUDY_KEYS: [(&str, ValueKind); 19] = [
    ("benchmark", ValueKind::Integer),
    ("label", ValueKind::Text),
    ("kind", ValueKind::Text),
    ("theta", ValueKind::Number),
    ("alpha0", ValueKind::Number),
    ("alpha", ValueKind::NumberList),
    ("beta", ValueKind::NumberList),
    ("innovation", ValueKind::Text),
    ("q", ValueKind::Number),
    ("nu", ValueKind::Number),
    ("burn_in", ValueKind::Integer),
    ("n", ValueKind::Integer),
    ("replications", ValueKind::Integer),
    ("p", ValueKind::Number),
    ("k_grid", ValueKind::Text),
    ("estimators", ValueKind::Text),
    ("x_p_true", ValueKind::Number),
    ("seed", ValueKind::Integer),
    ("canonical_xi", ValueKind::Number),
];

/// Parses `"a:b:step"` or a comma separated list.
pub fn parse_k_grid(text: &str) -> Result<Vec<usize>> {
    let bad = || TailError::Config(format!("key `k_grid`: cannot parse `{text}`"));
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let nums = parts
            .iter()
            .map(|s| s.parse::<usize>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let (from, to, step) = (nums[0], nums[1], nums[2]);
        if step == 0 || from > to {
            return Err(bad());
        }
        return Ok((from..=to).step_by(step).collect());
    }
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| bad()))
        .collect()
}

impl StudyFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg = if text.trim_start().starts_with('{') {
            serde_json::from_str(text)
        } else {
            serde_json::from_value(serde_json::Value::Object(parse_key_value(text, &STUDY_KEYS)?))
        };
        cfg.map_err(|e| TailError::Config(e.to_string()))
    }

    pub fn into_config(self) -> Result<StudyConfig> {
        let reps = self.replications.unwrap_or(500);
        let seed = self.seed.unwrap_or(0);
        let mut cfg = match (self.benchmark, &self.kind) {
            (Some(_), Some(_)) => {
                return Err(TailError::Config("give either `benchmark` or `kind`, not both".into()))
            }
            (Some(id), None) => StudyConfig::benchmark(id, reps, seed)?,
            (None, Some(kind)) => {
                let model = ModelConfig {
                    kind: kind.clone(),
                    theta: self.theta,
                    alpha0: self.alpha0,
                    alpha: self.alpha.clone(),
                    beta: self.beta.clone(),
                    innovation: self
                        .innovation
                        .clone()
                        .ok_or_else(|| TailError::Config("key `innovation` is required".into()))?,
                    q: self.q,
                    nu: self.nu,
                    burn_in: self.burn_in,
                    seed: None,
                };
                StudyConfig {
                    model: kind.clone(),
                    spec: model.to_spec()?,
                    n: self.n.ok_or_else(|| TailError::Config("key `n` is required".into()))?,
                    replications: reps,
                    p: self.p.unwrap_or(crate::tsgen::BENCHMARK_P),
                    k_grid: default_k_grid(),
                    estimators: Estimator::ALL.to_vec(),
                    x_p_true: self
                        .x_p_true
                        .ok_or_else(|| TailError::Config("key `x_p_true` is required".into()))?,
                    seed,
                    canonical_xi: CANONICAL_XI,
                }
            }
            (None, None) => {
                return Err(TailError::Config("key `benchmark` or `kind` is required".into()))
            }
        };
        if let Some(label) = self.label {
            cfg.model = label;
        }
        if let Some(b) = self.burn_in {
            cfg.spec.burn_in = b;
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(p) = self.p {
            cfg.p = p;
        }
        if let Some(x) = self.x_p_true {
            cfg.x_p_true = x;
        }
        if let Some(xi) = self.canonical_xi {
            cfg.canonical_xi = xi;
        }
        match self.k_grid {
            Some(ListOrText::List(v)) => cfg.k_grid = v,
            Some(ListOrText::Text(t)) => cfg.k_grid = parse_k_grid(&t)?,
            None => cfg.k_grid.retain(|&k| k < cfg.n),
        }
        match self.estimators {
            Some(ListOrText::List(v)) => {
                cfg.estimators = v.iter().map(|s| s.parse()).collect::<Result<_>>()?
            }
            Some(ListOrText::Text(t)) => {
                cfg.estimators = t
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            None => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
