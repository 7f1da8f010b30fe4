use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::json;

use heavytail::backtest::{block_bootstrap_ci_multi, BootstrapOptions};
use heavytail::io::{fmt_num, fmt_opt, neg_log_returns, read_series_csv};
use heavytail::mc_study::{default_k_grid, parse_k_grid, Estimator, CANONICAL_XI};
use heavytail::tsgen::SeededStream;
use heavytail::{
    gamma_dhmz, gamma_optimal_unbiased, hill, xi_from_rho_hat, GammaFlag, OrderStatistics,
    TailError, TailIndexEstimate,
};

use crate::error::{CliError, CliResult};
use crate::manifest::read_input;
use crate::{to_json_bytes, Common, Format, Run};

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Hill index only
    Hill,
    Unbiased,
    Weissman,
    Dhmz,
}

impl Method {
    fn as_str(self) -> &'static str {
        match self {
            Method::Hill => "hill",
            Method::Unbiased => "unbiased",
            Method::Weissman => "weissman",
            Method::Dhmz => "dhmz",
        }
    }

    fn estimator(self) -> Option<Estimator> {
        match self {
            Method::Hill => None,
            Method::Unbiased => Some(Estimator::Unbiased),
            Method::Weissman => Some(Estimator::Weissman),
            Method::Dhmz => Some(Estimator::Dhmz),
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum XiMode {
    /// rho_hat at k_rho, --xi when none is valid
    RhoHat,
    /// --xi for every k
    Canonical,
}

#[derive(Args, Debug, Clone)]
pub struct BootstrapArgs {
    /// Circular block bootstrap percentile intervals
    #[arg(long)]
    pub bootstrap: bool,
    #[arg(long, default_value_t = 200)]
    pub block_length: usize,
    #[arg(long, default_value_t = 99)]
    pub n_boot: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
}

impl BootstrapArgs {
    pub fn options(&self, n: usize) -> CliResult<Option<BootstrapOptions>> {
        if !self.bootstrap {
            return Ok(None);
        }
        if self.block_length == 0 || self.block_length > n {
            return Err(CliError::new(
                crate::error::code::DOMAIN,
                format!("--block-length {} must lie in 1..={n}", self.block_length),
            ));
        }
        if self.n_boot < 2 || !(self.level > 0.0 && self.level < 1.0) {
            return Err(CliError::usage("--n-boot must be at least 2 and --level inside (0, 1)"));
        }
        Ok(Some(BootstrapOptions {
            block_length: self.block_length,
            n_boot: self.n_boot,
            level: self.level,
            ..Default::default()
        }))
    }
}

#[derive(Args, Debug, Clone)]
pub struct EstimateArgs {
    /// CSV with a `value` column (optionally `timestamp,value`)
    #[arg(long, short)]
    pub input: PathBuf,
    /// Replace prices by x_t = -log(P_t / P_{t-1})
    #[arg(long)]
    pub neg_log_returns: bool,
    /// Single k
    #[arg(long, conflicts_with = "k_grid")]
    pub k: Option<usize>,
    /// `from:to:step` or a comma list; default 20:600:20 below n
    #[arg(long)]
    pub k_grid: Option<String>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Method::Unbiased, Method::Weissman, Method::Dhmz])]
    pub method: Vec<Method>,
    /// Tail probabilities; without them only indices are reported
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<f64>,
    #[arg(long, value_enum, default_value_t = XiMode::RhoHat)]
    pub xi_policy: XiMode,
    /// Canonical second-order parameter, also the fallback under rho-hat
    #[arg(long, default_value_t = CANONICAL_XI, allow_hyphen_values = true)]
    pub xi: f64,
    #[command(flatten)]
    pub boot: BootstrapArgs,
}

/// Everything that defines one sweep over `(k, method, p)`.
#[derive(Debug, Clone, Serialize)]
struct Sweep {
    k_grid: Vec<usize>,
    methods: Vec<Method>,
    p: Vec<Option<f64>>,
    xi_policy: XiMode,
    xi: f64,
}

#[derive(Debug, Clone, Copy)]
struct XiInfo {
    xi: f64,
    rho_hat: Option<f64>,
    k_rho: Option<usize>,
    fell_back: bool,
}

#[derive(Debug, Clone, Default)]
struct Cell {
    gamma: Option<f64>,
    x: Option<f64>,
    flags: Vec<&'static str>,
}

fn gamma_for(method: Method, s: &heavytail::TailSample, xi: f64) -> heavytail::Result<TailIndexEstimate> {
    match method {
        Method::Hill | Method::Weissman => Ok(hill(s)),
        Method::Unbiased => gamma_optimal_unbiased(s, xi),
        Method::Dhmz => gamma_dhmz(s, xi),
    }
}

impl Sweep {
    fn xi_info(&self, stats: &OrderStatistics) -> heavytail::Result<XiInfo> {
        let choice = xi_from_rho_hat(stats, self.xi)?;
        Ok(XiInfo {
            xi: match self.xi_policy {
                XiMode::RhoHat => choice.xi,
                XiMode::Canonical => self.xi,
            },
            rho_hat: choice.rho_estimate.and_then(|e| e.rho_hat),
            k_rho: choice.rho_estimate.map(|e| e.k_rho),
            fell_back: self.xi_policy == XiMode::RhoHat && choice.fell_back,
        })
    }

    /// Cells in `k`, method, `p` order.
    fn run(&self, series: &[f64]) -> heavytail::Result<(XiInfo, Vec<Cell>)> {
        let stats = OrderStatistics::new(series)?;
        let info = self.xi_info(&stats)?;
        let mut cells = Vec::with_capacity(self.k_grid.len() * self.methods.len() * self.p.len());
        for &k in &self.k_grid {
            let sample = match stats.tail(k) {
                Ok(s) => Some(s),
                Err(TailError::NonPositiveThreshold(_)) => None,
                Err(e) => return Err(e),
            };
            for &method in &self.methods {
                let corrected = matches!(method, Method::Unbiased | Method::Dhmz);
                let mut base = Cell::default();
                if corrected && info.fell_back {
                    base.flags.push("xi_fallback");
                }
                let Some(s) = &sample else {
                    base.flags.push("non_positive_threshold");
                    cells.extend(self.p.iter().map(|_| base.clone()));
                    continue;
                };
                match gamma_for(method, s, info.xi) {
                    Ok(g) => {
                        base.gamma = Some(g.gamma_hat).filter(|v| v.is_finite());
                        match g.flag() {
                            Some(GammaFlag::NonPositive) => base.flags.push("gamma_non_positive"),
                            Some(GammaFlag::NonFinite) => base.flags.push("gamma_non_finite"),
                            None => {}
                        }
                    }
                    Err(_) => base.flags.push("gamma_failed"),
                }
                for p in &self.p {
                    let mut cell = base.clone();
                    if let (Some(p), Some(est)) = (p, method.estimator()) {
                        match est.quantile(s, *p, info.xi) {
                            Ok(q) if q.is_usable() => cell.x = Some(q.x_hat),
                            Ok(_) => cell.flags.push("correction_overshoot"),
                            Err(TailError::TailProbability { .. }) => cell.flags.push("p_out_of_range"),
                            Err(TailError::NonPositiveGamma(_)) if base.gamma.is_some_and(|g| g <= 0.0) => {}
                            Err(_) => cell.flags.push("quantile_failed"),
                        }
                    }
                    cells.push(cell);
                }
            }
        }
        Ok((info, cells))
    }
}

#[derive(Debug, Serialize)]
struct Band {
    gamma_lo: Option<f64>,
    gamma_hi: Option<f64>,
    x_lo: Option<f64>,
    x_hi: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Row {
    k: usize,
    method: &'static str,
    p: Option<f64>,
    gamma_hat: Option<f64>,
    x_hat: Option<f64>,
    rho_hat: Option<f64>,
    k_rho: Option<usize>,
    xi: f64,
    flags: String,
    #[serde(flatten)]
    band: Option<Band>,
}

fn validate(sweep: &Sweep, n: usize) -> CliResult<()> {
    if let Some(&k) = sweep.k_grid.iter().find(|&&k| k == 0 || k >= n) {
        return Err(TailError::KOutOfRange { k, n }.into());
    }
    if sweep.k_grid.is_empty() {
        return Err(CliError::usage("the k grid is empty"));
    }
    if let Some(p) = sweep.p.iter().flatten().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(CliError::new(crate::error::code::DOMAIN, format!("p = {p} must lie in (0, 1)")));
    }
    if !(sweep.xi < 0.0) {
        return Err(TailError::NonNegativeRho(sweep.xi).into());
    }
    Ok(())
}

pub fn run(args: &EstimateArgs, common: &Common) -> CliResult<Run> {
    let mut inputs = Vec::new();
    let raw = read_input(&args.input, &mut inputs)?;
    let mut table = read_series_csv(raw.as_slice()).map_err(|e| CliError::from(e).context(args.input.display()))?;
    if args.neg_log_returns {
        table = neg_log_returns(&table)?;
    }
    let series = table.values;
    let n = series.len();
    let k_grid = match (args.k, &args.k_grid) {
        (Some(k), _) => vec![k],
        (None, Some(text)) => parse_k_grid(text)?,
        (None, None) => default_k_grid().into_iter().filter(|&k| k < n).collect(),
    };
    let mut methods = args.method.clone();
    methods.dedup();
    let sweep = Sweep {
        k_grid,
        methods,
        p: if args.p.is_empty() { vec![None] } else { args.p.iter().copied().map(Some).collect() },
        xi_policy: args.xi_policy,
        xi: args.xi,
    };
    validate(&sweep, n)?;
    if series.iter().all(|&x| !(x > 0.0)) {
        return Err(TailError::TooFewPositive(0).into());
    }

    let (info, cells) = sweep.run(&series)?;
    let boot = args.boot.options(n)?;
    let seed = boot.map(|_| common.seed.unwrap_or(0));
    let bands = match (&boot, seed) {
        (Some(opts), Some(seed)) => {
            let res = block_bootstrap_ci_multi(
                &series,
                |xs| {
                    let (_, cells) = sweep.run(xs)?;
                    Ok(cells
                        .iter()
                        .flat_map(|c| [c.gamma.unwrap_or(f64::NAN), c.x.unwrap_or(f64::NAN)])
                        .collect())
                },
                opts,
                &SeededStream::new(seed),
            )?;
            for w in &res.warnings {
                eprintln!("warning: {w}");
            }
            Some(res.intervals)
        }
        _ => None,
    };

    let mut rows = Vec::with_capacity(cells.len());
    let mut c = 0;
    for &k in &sweep.k_grid {
        for &method in &sweep.methods {
            for &p in &sweep.p {
                let cell = &cells[c];
                let band = bands.as_ref().map(|b| {
                    let get = |i: usize| b.get(i).cloned().flatten();
                    let (g, x) = (get(2 * c), get(2 * c + 1));
                    Band {
                        gamma_lo: g.as_ref().map(|i| i.lower),
                        gamma_hi: g.as_ref().map(|i| i.upper),
                        x_lo: x.as_ref().map(|i| i.lower),
                        x_hi: x.as_ref().map(|i| i.upper),
                    }
                });
                rows.push(Row {
                    k,
                    method: method.as_str(),
                    p,
                    gamma_hat: cell.gamma,
                    x_hat: cell.x,
                    rho_hat: info.rho_hat,
                    k_rho: info.k_rho,
                    xi: info.xi,
                    flags: cell.flags.join(";"),
                    band,
                });
                c += 1;
            }
        }
    }

    let bytes = match common.format {
        Format::Csv => write_csv(&rows, bands.is_some()),
        Format::Json => to_json_bytes(&rows),
    };
    let config = json!({
        "input": args.input.display().to_string(),
        "neg_log_returns": args.neg_log_returns,
        "n": n,
        "sweep": sweep,
        "bootstrap": boot.map(|o| json!({
            "block_length": o.block_length,
            "n_boot": o.n_boot,
            "level": o.level,
            "max_retries": o.max_retries,
        })),
        "format": format!("{:?}", common.format).to_lowercase(),
    });
    Ok(Run::new("estimate", seed, config, inputs, bytes))
}

fn write_csv(rows: &[Row], with_band: bool) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["k", "method", "p", "gamma_hat", "x_hat", "rho_hat", "k_rho", "xi", "flags"];
    if with_band {
        header.extend(["gamma_lo", "gamma_hi", "x_lo", "x_hi"]);
    }
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        let mut rec = vec![
            r.k.to_string(),
            r.method.to_string(),
            fmt_opt(r.p),
            fmt_opt(r.gamma_hat),
            fmt_opt(r.x_hat),
            fmt_opt(r.rho_hat),
            r.k_rho.map(|k| k.to_string()).unwrap_or_default(),
            fmt_num(r.xi),
            r.flags.clone(),
        ];
        if let Some(b) = &r.band {
            rec.extend([fmt_opt(b.gamma_lo), fmt_opt(b.gamma_hi), fmt_opt(b.x_lo), fmt_opt(b.x_hi)]);
        }
        w.write_record(&rec).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}
