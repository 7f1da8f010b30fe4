use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use heavytail::backtest::{
    arima_residuals, forecast_bands, kupiec_test, return_level_transform, rolling_forecast,
    rolling_forecast_arima, BacktestFile, BacktestReport,
};
use heavytail::io::{fmt_num, fmt_opt, neg_log_returns, read_series_csv};
use heavytail::tsgen::SeededStream;

use crate::error::{CliError, CliResult};
use crate::estimate::BootstrapArgs;
use crate::manifest::{read_input, read_text};
use crate::{to_json_bytes, Common, Format, Run};

#[derive(Args, Debug, Clone)]
pub struct BacktestArgs {
    /// CSV with a `value` column (optionally `timestamp,value`)
    #[arg(long, short, required_unless_present = "counts", conflicts_with = "counts")]
    pub input: Option<PathBuf>,
    /// Replace prices by x_t = -log(P_t / P_{t-1})
    #[arg(long)]
    pub neg_log_returns: bool,
    /// Backtest file, `key = value` lines or JSON; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Kupiec test only, from `n_forecasts,n_violations`
    #[arg(long, value_delimiter = ',', num_args = 1, value_names = ["N,X"])]
    pub counts: Option<Vec<usize>>,
    /// Past observations per forecast
    #[arg(long)]
    pub window: Option<usize>,
    /// Number of forecasts, taken at the end of the series
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    /// unbiased, weissman or dhmz
    #[arg(long)]
    pub method: Option<String>,
    /// rho_hat or canonical
    #[arg(long)]
    pub xi_policy: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub xi: Option<f64>,
    /// Filter through ARIMA(1,1,1) residuals, e.g. `phi1=0.819,theta1=-0.989`
    #[arg(long, allow_hyphen_values = true)]
    pub arima: Option<String>,
    #[command(flatten)]
    pub boot: BootstrapArgs,
}

fn counts_only(args: &BacktestArgs, counts: &[usize], common: &Common) -> CliResult<Run> {
    let &[n, x] = counts else {
        return Err(CliError::usage("--counts takes `n_forecasts,n_violations`"));
    };
    if x > n {
        return Err(CliError::usage(format!("{x} violations out of {n} forecasts")));
    }
    let p = args.p.unwrap_or(0.01);
    let k = kupiec_test(n, x, p)?;
    let expected = n as f64 * p;
    eprintln!("kupiec: {x} violations of {n} (expected {expected:.2}), LR {:.4}, p-value {:.4}", k.lr, k.pvalue);
    let bytes = match common.format {
        Format::Csv => format!(
            "n,x,p,expected_violations,kupiec_lr,kupiec_pvalue\n{n},{x},{},{},{},{}\n",
            fmt_num(p),
            fmt_num(expected),
            fmt_num(k.lr),
            fmt_num(k.pvalue)
        )
        .into_bytes(),
        Format::Json => to_json_bytes(&json!({
            "n": n, "x": x, "p": p, "expected_violations": expected,
            "kupiec_lr": k.lr, "kupiec_pvalue": k.pvalue,
        })),
    };
    let config = json!({ "counts": [n, x], "p": p, "format": format!("{:?}", common.format).to_lowercase() });
    Ok(Run::new("backtest", None, config, Vec::new(), bytes))
}

/// One table section: a report, its bootstrap bands and the offset from the
/// report's time index to the original series.
struct Section<'a> {
    scale: Option<&'static str>,
    report: &'a BacktestReport,
    bands: Option<&'a [Option<(f64, f64)>]>,
    offset: usize,
}

fn write_csv(sections: &[Section], timestamps: Option<&[String]>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let arima = sections.iter().any(|s| s.scale.is_some());
    let banded = sections.iter().any(|s| s.bands.is_some());
    let mut header = Vec::new();
    if arima {
        header.push("scale");
    }
    header.push("time");
    if timestamps.is_some() {
        header.push("timestamp");
    }
    header.extend(["forecast", "realized", "violation"]);
    if banded {
        header.extend(["lower", "upper"]);
    }
    w.write_record(&header).expect("in-memory write");
    for s in sections {
        for (i, f) in s.report.forecasts.iter().enumerate() {
            let t = f.time + s.offset;
            let mut rec = Vec::new();
            if let Some(scale) = s.scale {
                rec.push(scale.to_string());
            }
            rec.push(t.to_string());
            if let Some(ts) = timestamps {
                rec.push(ts.get(t).cloned().unwrap_or_default());
            }
            rec.extend([fmt_opt(f.forecast), fmt_num(f.realized), u8::from(f.violation).to_string()]);
            if banded {
                let b = s.bands.and_then(|b| b.get(i).copied().flatten());
                rec.extend([fmt_opt(b.map(|b| b.0)), fmt_opt(b.map(|b| b.1))]);
            }
            w.write_record(&rec).expect("in-memory write");
        }
    }
    w.into_inner().expect("in-memory write")
}

fn summarize(label: &str, r: &BacktestReport) {
    eprintln!(
        "{label}: {} violations of {} forecasts ({} missing, expected {:.2}), Kupiec LR {:.4}, p-value {:.4}",
        r.violations.len(),
        r.forecasts.len() - r.n_missing,
        r.n_missing,
        r.expected_violations,
        r.kupiec_lr,
        r.kupiec_pvalue
    );
}

pub fn run(args: &BacktestArgs, common: &Common) -> CliResult<Run> {
    if let Some(counts) = &args.counts {
        return counts_only(args, counts, common);
    }
    let input = args.input.as_ref().ok_or_else(|| CliError::usage("--input is required"))?;
    let mut inputs = Vec::new();
    let file = match &args.config {
        Some(path) => BacktestFile::parse(&read_text(path, &mut inputs)?)
            .map_err(|e| CliError::from(e).context(path.display()))?,
        None => BacktestFile::default(),
    };
    let flags = BacktestFile {
        window: args.window,
        horizon: args.horizon,
        p: args.p,
        k: args.k,
        method: args.method.clone(),
        xi_policy: args.xi_policy.clone(),
        xi: args.xi,
        arima: args.arima.clone(),
    };
    let (config, arima) = file.overridden_by(flags).into_config()?;

    let raw = read_input(input, &mut inputs)?;
    let mut table = read_series_csv(raw.as_slice()).map_err(|e| CliError::from(e).context(input.display()))?;
    if args.neg_log_returns {
        table = neg_log_returns(&table)?;
    }
    let series = &table.values;
    let opts = args.boot.options(config.window)?;
    let seed = opts.map(|_| common.seed.unwrap_or(0));
    let forecaster = |w: &[f64]| config.forecast(w);

    let (bytes, resolved_arima) = match arima {
        None => {
            let report = rolling_forecast(series, &config)?;
            summarize("backtest", &report);
            let bands = match (opts, seed) {
                (Some(o), Some(s)) => {
                    let times: Vec<usize> = report.forecasts.iter().map(|f| f.time).collect();
                    Some(forecast_bands(series, config.window, &times, forecaster, &o, &SeededStream::new(s))?)
                }
                _ => None,
            };
            let bytes = match common.format {
                Format::Csv => write_csv(
                    &[Section { scale: None, report: &report, bands: bands.as_deref(), offset: 0 }],
                    table.timestamps.as_deref(),
                ),
                Format::Json => to_json_bytes(&json!({ "config": config, "report": report, "bands": bands })),
            };
            (bytes, None)
        }
        Some(coeffs) => {
            let res = rolling_forecast_arima(series, &config, coeffs)?;
            summarize("residual scale", &res.residual);
            summarize("original scale", &res.original);
            let (bands_e, bands_x) = match (opts, seed) {
                (Some(o), Some(s)) => {
                    let e = arima_residuals(series, coeffs)?;
                    let times: Vec<usize> = res.residual.forecasts.iter().map(|f| f.time).collect();
                    let be = forecast_bands(&e, config.window, &times, forecaster, &o, &SeededStream::new(s))?;
                    let bx = times
                        .iter()
                        .zip(&be)
                        .map(|(&j, b)| {
                            let e_prev = if j == 0 { 0.0 } else { e[j - 1] };
                            let t = j + 2;
                            b.map(|(lo, hi)| {
                                let map = |r| return_level_transform(r, e_prev, series[t - 1], series[t - 2], coeffs);
                                (map(lo), map(hi))
                            })
                        })
                        .collect::<Vec<_>>();
                    (Some(be), Some(bx))
                }
                _ => (None, None),
            };
            let bytes = match common.format {
                Format::Csv => write_csv(
                    &[
                        Section { scale: Some("residual"), report: &res.residual, bands: bands_e.as_deref(), offset: 2 },
                        Section { scale: Some("original"), report: &res.original, bands: bands_x.as_deref(), offset: 0 },
                    ],
                    table.timestamps.as_deref(),
                ),
                Format::Json => to_json_bytes(&json!({
                    "config": config,
                    "arima": coeffs,
                    "residual": { "report": res.residual, "bands": bands_e },
                    "original": { "report": res.original, "bands": bands_x },
                })),
            };
            (bytes, Some(coeffs))
        }
    };
    let resolved = json!({
        "input": input.display().to_string(),
        "neg_log_returns": args.neg_log_returns,
        "n": series.len(),
        "backtest": config,
        "arima": resolved_arima,
        "bootstrap": opts.map(|o| json!({
            "block_length": o.block_length,
            "n_boot": o.n_boot,
            "level": o.level,
            "max_retries": o.max_retries,
        })),
        "format": format!("{:?}", common.format).to_lowercase(),
    });
    Ok(Run::new("backtest", seed, resolved, inputs, bytes))
}
