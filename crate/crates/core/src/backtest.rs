//! Rolling out-of-sample quantile forecasts, violation counting, the Kupiec
//! unconditional coverage test, circular block bootstrap intervals and the
//! ARIMA(1,1,1) residual filter used for seasonal series.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TailError};
use crate::io::{fmt_num, fmt_opt};
use crate::mc_study::{Estimator, CANONICAL_XI};
use crate::tail::{xi_from_rho_hat, OrderStatistics};
use crate::tsgen::{parse_key_value, SeededStream, ValueKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KupiecResult {
    pub lr: f64,
    pub pvalue: f64,
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Likelihood ratio of the observed violation rate `x / n` against `p`, with
/// its chi-square(1) p-value.
pub fn kupiec_test(n: usize, x: usize, p: f64) -> Result<KupiecResult> {
    if x > n {
        return Err(TailError::Config(format!("{x} violations out of {n} forecasts")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(TailError::TailProbability { p, limit: 1.0 });
    }
    if n == 0 {
        return Ok(KupiecResult { lr: 0.0, pvalue: 1.0 });
    }
    let (nf, xf) = (n as f64, x as f64);
    let rate = xf / nf;
    let null = xlogy(nf - xf, 1.0 - p) + xlogy(xf, p);
    let alt = xlogy(nf - xf, 1.0 - rate) + xlogy(xf, rate);
    let lr = (-2.0 * null + 2.0 * alt).max(0.0);
    Ok(KupiecResult { lr, pvalue: libm::erfc((lr / 2.0).sqrt()) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub block_length: usize,
    pub n_boot: usize,
    pub level: f64,
    /// Redraws allowed for a resample on which the statistic fails.
    pub max_retries: usize,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self { block_length: 200, n_boot: 99, level: 0.95, max_retries: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInterval {
    pub lower: f64,
    pub upper: f64,
    /// Resamples that entered the percentile interval.
    pub n_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// One entry per statistic component; `None` when no resample produced it.
    pub intervals: Vec<Option<BootstrapInterval>>,
    /// Resamples dropped after exhausting their retries.
    pub n_excluded: usize,
    pub warnings: Vec<String>,
}

/// 1-based ranks of the percentile interval among `b` ordered values.
pub fn percentile_ranks(b: usize, level: f64) -> (usize, usize) {
    let alpha = 1.0 - level;
    let bp1 = (b + 1) as f64;
    let lo = ((bp1 * alpha / 2.0) - 1e-9).ceil() as usize;
    let hi = ((bp1 * (1.0 - alpha / 2.0)) + 1e-9).floor() as usize;
    (lo.clamp(1, b), hi.clamp(1, b))
}

/// Circular moving-block resample of `series` of the same length.
pub fn circular_block_resample<R: Rng>(series: &[f64], block_length: usize, rng: &mut R) -> Vec<f64> {
    let n = series.len();
    let mut out = Vec::with_capacity(n + block_length);
    while out.len() < n {
        let start = rng.random_range(0..n);
        out.extend((0..block_length).map(|j| series[(start + j) % n]));
    }
    out.truncate(n);
    out
}

fn validate_bootstrap(n: usize, opts: &BootstrapOptions) -> Result<()> {
    if opts.block_length == 0 || opts.block_length > n {
        return Err(TailError::Config(format!(
            "block length {} must lie in 1..={n}",
            opts.block_length
        )));
    }
    if opts.n_boot < 2 {
        return Err(TailError::Config("at least 2 bootstrap samples are required".into()));
    }
    if !(opts.level > 0.0 && opts.level < 1.0) {
        return Err(TailError::Config(format!("level {} outside (0, 1)", opts.level)));
    }
    Ok(())
}

/// Percentile intervals for a vector-valued statistic. Resample `i` uses
/// `stream.split(i)`; a failing resample is redrawn up to `max_retries` times,
/// then excluded. Non-finite components are excluded component-wise.
pub fn block_bootstrap_ci_multi<F>(
    series: &[f64],
    statistic: F,
    opts: &BootstrapOptions,
    stream: &SeededStream,
) -> Result<BootstrapResult>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    validate_bootstrap(series.len(), opts)?;
    let draws: Vec<Option<Vec<f64>>> = (0..opts.n_boot)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.split(i as u64).rng();
            (0..=opts.max_retries).find_map(|_| {
                let resample = circular_block_resample(series, opts.block_length, &mut rng);
                statistic(&resample).ok()
            })
        })
        .collect();
    let n_excluded = draws.iter().filter(|d| d.is_none()).count();
    let mut warnings = Vec::new();
    if n_excluded > 0 {
        warnings.push(format!("{n_excluded} resamples excluded after {} retries", opts.max_retries));
    }
    let width = draws.iter().flatten().map(Vec::len).max().unwrap_or(0);
    let intervals = (0..width)
        .map(|c| {
            let mut vals: Vec<f64> = draws
                .iter()
                .flatten()
                .filter_map(|d| d.get(c).copied())
                .filter(|v| v.is_finite())
                .collect();
            if vals.is_empty() {
                return None;
            }
            vals.sort_by(f64::total_cmp);
            let (lo, hi) = percentile_ranks(vals.len(), opts.level);
            Some(BootstrapInterval { lower: vals[lo - 1], upper: vals[hi - 1], n_used: vals.len() })
        })
        .collect();
    Ok(BootstrapResult { intervals, n_excluded, warnings })
}

/// Percentile interval of a scalar statistic under the circular block bootstrap.
pub fn block_bootstrap_ci<F>(
    series: &[f64],
    statistic: F,
    opts: &BootstrapOptions,
    stream: &SeededStream,
) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let res = block_bootstrap_ci_multi(
        series,
        |xs| {
            let v = statistic(xs)?;
            if v.is_finite() {
                Ok(vec![v])
            } else {
                Err(TailError::NonFinite("bootstrap statistic"))
            }
        },
        opts,
        stream,
    )?;
    match res.intervals.first() {
        Some(Some(ci)) => Ok((ci.lower, ci.upper)),
        _ => Err(TailError::NonFinite("bootstrap: statistic failed on every resample")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArimaCoeffs {
    pub phi1: f64,
    pub theta1: f64,
}

impl ArimaCoeffs {
    /// Parses `phi1=0.819,theta1=-0.989`.
    pub fn parse(text: &str) -> Result<Self> {
        let (mut phi1, mut theta1) = (None, None);
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| TailError::Config(format!("arima: expected key=value, got `{part}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| TailError::Config(format!("arima: `{}` is not a number", v.trim())))?;
            match k.trim() {
                "phi1" => phi1 = Some(v),
                "theta1" => theta1 = Some(v),
                other => return Err(TailError::Config(format!("arima: unknown key `{other}`"))),
            }
        }
        let coeffs = ArimaCoeffs {
            phi1: phi1.ok_or_else(|| TailError::Config("arima: `phi1` missing".into()))?,
            theta1: theta1.ok_or_else(|| TailError::Config("arima: `theta1` missing".into()))?,
        };
        if !(coeffs.phi1.is_finite() && coeffs.theta1.is_finite()) {
            return Err(TailError::NonFinite("arima coefficients"));
        }
        Ok(coeffs)
    }
}

/// `e_t = x_t - x_{t-1} - phi1 x_{t-1} + phi1 x_{t-2} + theta1 e_{t-1}` for
/// `t = 2..n`, with a zero pre-sample residual. Element `j` belongs to `x[j + 2]`.
pub fn arima_residuals(series: &[f64], coeffs: ArimaCoeffs) -> Result<Vec<f64>> {
    if series.len() < 3 {
        return Err(TailError::SeriesTooShort { n: series.len(), min: 3 });
    }
    let ArimaCoeffs { phi1, theta1 } = coeffs;
    let mut prev = 0.0;
    Ok(series
        .windows(3)
        .map(|w| {
            let e = w[2] - w[1] - phi1 * w[1] + phi1 * w[0] + theta1 * prev;
            prev = e;
            e
        })
        .collect())
}

/// Maps a residual-scale level back to the original scale:
/// `r_x = r_e - theta1 e_{t-1} + x_{t-1} + phi1 x_{t-1} - phi1 x_{t-2}`.
pub fn return_level_transform(
    r_e: f64,
    e_prev: f64,
    x_prev: f64,
    x_prev2: f64,
    coeffs: ArimaCoeffs,
) -> f64 {
    r_e - coeffs.theta1 * e_prev + x_prev + coeffs.phi1 * x_prev - coeffs.phi1 * x_prev2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum XiPolicy {
    /// `rho_hat` at `k_rho` of each window, `fallback` when none is valid.
    FromRhoHat { fallback: f64 },
    Canonical { xi: f64 },
}

impl Default for XiPolicy {
    fn default() -> Self {
        XiPolicy::FromRhoHat { fallback: CANONICAL_XI }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub window: usize,
    pub horizon_points: usize,
    pub p: f64,
    pub k: usize,
    pub method: Estimator,
    pub xi_policy: XiPolicy,
}

impl BacktestConfig {
    pub fn validate(&self, len: usize) -> Result<()> {
        if self.window + self.horizon_points > len {
            return Err(TailError::Config(format!(
                "window {} + horizon {} exceeds series length {len}",
                self.window, self.horizon_points
            )));
        }
        if self.horizon_points == 0 {
            return Err(TailError::Config("horizon must be at least 1".into()));
        }
        if self.k == 0 || self.k >= self.window {
            return Err(TailError::KOutOfRange { k: self.k, n: self.window });
        }
        let limit = self.k as f64 / self.window as f64;
        if !(self.p > 0.0 && self.p < limit) {
            return Err(TailError::TailProbability { p: self.p, limit });
        }
        match self.xi_policy {
            XiPolicy::FromRhoHat { fallback: xi } | XiPolicy::Canonical { xi } if !(xi < 0.0) => {
                Err(TailError::NonNegativeRho(xi))
            }
            _ => Ok(()),
        }
    }

    /// Quantile forecast from one window of past observations.
    pub fn forecast(&self, window: &[f64]) -> Result<f64> {
        let stats = OrderStatistics::new(window)?;
        let xi = match self.xi_policy {
            XiPolicy::FromRhoHat { fallback } => xi_from_rho_hat(&stats, fallback)?.xi,
            XiPolicy::Canonical { xi } => xi,
        };
        let q = self.method.quantile(&stats.tail(self.k)?, self.p, xi)?;
        if q.is_usable() {
            Ok(q.x_hat)
        } else {
            Err(TailError::NonFinite("quantile forecast flagged"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    /// Index into the series of the forecast target.
    pub time: usize,
    /// `None` when the estimator failed on this window.
    pub forecast: Option<f64>,
    pub realized: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub forecasts: Vec<Forecast>,
    pub violations: Vec<usize>,
    pub n_missing: usize,
    pub p: f64,
    /// `p` times the number of non-missing forecasts.
    pub expected_violations: f64,
    pub kupiec_lr: f64,
    pub kupiec_pvalue: f64,
}

impl BacktestReport {
    fn from_forecasts(forecasts: Vec<Forecast>, p: f64) -> Result<Self> {
        let violations: Vec<usize> =
            forecasts.iter().filter(|f| f.violation).map(|f| f.time).collect();
        let n_missing = forecasts.iter().filter(|f| f.forecast.is_none()).count();
        let n_valid = forecasts.len() - n_missing;
        let k = kupiec_test(n_valid, violations.len(), p)?;
        Ok(BacktestReport {
            forecasts,
            violations,
            n_missing,
            p,
            expected_violations: n_valid as f64 * p,
            kupiec_lr: k.lr,
            kupiec_pvalue: k.pvalue,
        })
    }

    /// Columns `time, forecast, realized, violation`; `labels` replaces the
    /// integer time index when given.
    pub fn write_csv<W: Write>(&self, out: W, labels: Option<&[String]>) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| TailError::Config(format!("csv output: {e}"));
        w.write_record(["time", "forecast", "realized", "violation"]).map_err(io)?;
        for f in &self.forecasts {
            let time = labels
                .and_then(|l| l.get(f.time).cloned())
                .unwrap_or_else(|| f.time.to_string());
            w.write_record([
                time,
                fmt_opt(f.forecast),
                fmt_num(f.realized),
                u8::from(f.violation).to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| TailError::Config(format!("csv output: {e}")))
    }
}

/// Forecasts the last `horizon` points of `series`, each from the `window`
/// observations before it. A violation is `realized > forecast`.
pub fn rolling_forecast_with<F>(
    series: &[f64],
    window: usize,
    horizon: usize,
    p: f64,
    forecaster: F,
) -> Result<BacktestReport>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if window + horizon > series.len() || horizon == 0 || window == 0 {
        return Err(TailError::Config(format!(
            "window {window} + horizon {horizon} does not fit a series of length {}",
            series.len()
        )));
    }
    let first = series.len() - horizon;
    let forecasts = (first..series.len())
        .into_par_iter()
        .map(|t| {
            let forecast = forecaster(&series[t - window..t]).ok().filter(|x| !x.is_nan());
            let realized = series[t];
            Forecast {
                time: t,
                forecast,
                realized,
                violation: forecast.is_some_and(|f| realized > f),
            }
        })
        .collect();
    BacktestReport::from_forecasts(forecasts, p)
}

pub fn rolling_forecast(series: &[f64], config: &BacktestConfig) -> Result<BacktestReport> {
    config.validate(series.len())?;
    rolling_forecast_with(series, config.window, config.horizon_points, config.p, |w| {
        config.forecast(w)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaBacktest {
    pub coeffs: ArimaCoeffs,
    /// Forecasts of the residual series; `time` indexes the residuals.
    pub residual: BacktestReport,
    /// The same forecasts mapped back to the original series; `time` indexes it.
    pub original: BacktestReport,
}

/// Backtest on ARIMA residuals, reporting both the residual-scale forecasts and
/// their original-scale return levels.
pub fn rolling_forecast_arima(
    series: &[f64],
    config: &BacktestConfig,
    coeffs: ArimaCoeffs,
) -> Result<ArimaBacktest> {
    let e = arima_residuals(series, coeffs)?;
    let residual = rolling_forecast(&e, config)?;
    let forecasts = residual
        .forecasts
        .iter()
        .map(|f| {
            let j = f.time;
            let t = j + 2;
            let e_prev = if j == 0 { 0.0 } else { e[j - 1] };
            let forecast = f
                .forecast
                .map(|r| return_level_transform(r, e_prev, series[t - 1], series[t - 2], coeffs));
            Forecast {
                time: t,
                forecast,
                realized: series[t],
                violation: forecast.is_some_and(|x| series[t] > x),
            }
        })
        .collect();
    let original = BacktestReport::from_forecasts(forecasts, config.p)?;
    Ok(ArimaBacktest { coeffs, residual, original })
}

/// Bootstrap band around each forecast: the circular block bootstrap applied
/// to the window preceding `times[j]`, resamples drawn from `stream.split(times[j])`.
pub fn forecast_bands<F>(
    series: &[f64],
    window: usize,
    times: &[usize],
    forecaster: F,
    opts: &BootstrapOptions,
    stream: &SeededStream,
) -> Result<Vec<Option<(f64, f64)>>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    times
        .iter()
        .map(|&t| {
            if t < window || t > series.len() {
                return Err(TailError::Config(format!("no full window before time {t}")));
            }
            let w = &series[t - window..t];
            match block_bootstrap_ci(w, &forecaster, opts, &stream.split(t as u64)) {
                Ok(ci) => Ok(Some(ci)),
                Err(TailError::NonFinite(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// On-disk backtest description (`key = value` or JSON).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacktestFile {
    pub window: Option<usize>,
    pub horizon: Option<usize>,
    pub p: Option<f64>,
    pub k: Option<usize>,
    pub method: Option<String>,
    /// `rho_hat` (default) or `canonical`.
    pub xi_policy: Option<String>,
    /// The canonical value, or the fallback under `rho_hat`.
    pub xi: Option<f64>,
    /// `phi1=..,theta1=..`
    pub arima: Option<String>,
}

const BACKTEST_KEYS: [(&str, ValueKind); 8] = [
    ("window", ValueKind::Integer),
    ("horizon", ValueKind::Integer),
    ("p", ValueKind::Number),
    ("k", ValueKind::Integer),
    ("method", ValueKind::Text),
    ("xi_policy", ValueKind::Text),
    ("xi", ValueKind::Number),
    ("arima", ValueKind::Text),
];

impl BacktestFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg = if text.trim_start().starts_with('{') {
            serde_json::from_str(text)
        } else {
            serde_json::from_value(serde_json::Value::Object(parse_key_value(text, &BACKTEST_KEYS)?))
        };
        cfg.map_err(|e| TailError::Config(e.to_string()))
    }

    /// Fields set in `other` replace ours.
    pub fn overridden_by(self, other: BacktestFile) -> Self {
        BacktestFile {
            window: other.window.or(self.window),
            horizon: other.horizon.or(self.horizon),
            p: other.p.or(self.p),
            k: other.k.or(self.k),
            method: other.method.or(self.method),
            xi_policy: other.xi_policy.or(self.xi_policy),
            xi: other.xi.or(self.xi),
            arima: other.arima.or(self.arima),
        }
    }

    /// Defaults: `p = 0.01`, the unbiased estimator, `xi` from `rho_hat`
    /// falling back to -1. `window`, `horizon` and `k` are required.
    pub fn into_config(self) -> Result<(BacktestConfig, Option<ArimaCoeffs>)> {
        let need = |v: Option<usize>, key: &str| {
            v.ok_or_else(|| TailError::Config(format!("key `{key}` is required")))
        };
        let method = match &self.method {
            Some(m) => m.parse()?,
            None => Estimator::Unbiased,
        };
        let xi = self.xi.unwrap_or(CANONICAL_XI);
        let xi_policy = match self.xi_policy.as_deref() {
            None | Some("rho_hat") => XiPolicy::FromRhoHat { fallback: xi },
            Some("canonical") => XiPolicy::Canonical { xi },
            Some(other) => {
                return Err(TailError::Config(format!(
                    "key `xi_policy`: expected `rho_hat` or `canonical`, got `{other}`"
                )))
            }
        };
        let config = BacktestConfig {
            window: need(self.window, "window")?,
            horizon_points: need(self.horizon, "horizon")?,
            p: self.p.unwrap_or(0.01),
            k: need(self.k, "k")?,
            method,
            xi_policy,
        };
        let arima = self.arima.as_deref().map(ArimaCoeffs::parse).transpose()?;
        Ok((config, arima))
    }
}
