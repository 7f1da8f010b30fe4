//! `heavytail`: simulate heavy-tailed series, estimate tail indices and extreme
//! quantiles, run Monte Carlo studies and backtest quantile forecasts.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

mod backtest;
mod error;
mod estimate;
mod manifest;
mod mcstudy;
mod simulate;

use error::{code, CliError, CliResult};
use manifest::{FileDigest, RunManifest};

#[derive(Parser, Debug)]
#[command(name = "heavytail", version, about = "Extreme quantile estimation for heavy-tailed series")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Root seed of the random streams
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (output does not depend on this)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file; stdout when absent
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Manifest file; defaults to `<output>.manifest.json`
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a series from a model file or a benchmark model
    Simulate(simulate::SimulateArgs),
    /// Tail index and quantile estimates over a k grid
    Estimate(estimate::EstimateArgs),
    /// Monte Carlo ABias / RMSE study
    Mcstudy(mcstudy::McstudyArgs),
    /// Rolling quantile forecasts with the Kupiec test
    Backtest(backtest::BacktestArgs),
    /// Re-run a manifest and check the output digest
    Replay(ReplayArgs),
}

#[derive(Args, Debug)]
struct ReplayArgs {
    manifest_file: PathBuf,
}

/// Output bytes plus the manifest describing them.
pub struct Run {
    pub bytes: Vec<u8>,
    pub manifest: RunManifest,
}

impl Run {
    pub fn new(subcommand: &str, seed: Option<u64>, config: Value, inputs: Vec<FileDigest>, bytes: Vec<u8>) -> Self {
        Run {
            bytes,
            manifest: RunManifest {
                subcommand: subcommand.into(),
                version: env!("CARGO_PKG_VERSION").into(),
                rng: heavytail::tsgen::SeededStream::ALGORITHM.into(),
                seed,
                config,
                inputs,
                output: None,
                args: Vec::new(),
            },
        }
    }
}

pub fn to_json_bytes<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("output serializes");
    bytes.push(b'\n');
    bytes
}

fn execute(cli: &Cli) -> CliResult<Run> {
    match &cli.command {
        Command::Simulate(a) => simulate::run(a, &cli.common),
        Command::Estimate(a) => estimate::run(a, &cli.common),
        Command::Mcstudy(a) => mcstudy::run(a, &cli.common),
        Command::Backtest(a) => backtest::run(a, &cli.common),
        Command::Replay(_) => Err(CliError::usage("a manifest cannot replay another replay")),
    }
}

fn parse(args: &[String]) -> Result<Cli, clap::Error> {
    Cli::try_parse_from(std::iter::once("heavytail".to_string()).chain(args.iter().cloned()))
}

fn replay(path: &PathBuf, common: &Common) -> CliResult<()> {
    let recorded = manifest::load(path)?;
    for input in &recorded.inputs {
        let bytes = std::fs::read(&input.path).map_err(|e| CliError::io(input.path.as_ref(), e))?;
        if manifest::sha256_hex(&bytes) != input.sha256 {
            return Err(CliError::new(code::FAILURE, format!("input {} changed since the recorded run", input.path)));
        }
    }
    let cli = parse(&recorded.args).map_err(|e| CliError::parse(format!("recorded arguments: {e}")))?;
    let run = execute(&cli)?;
    let digest = manifest::sha256_hex(&run.bytes);
    if let Some(path) = &common.output {
        std::fs::write(path, &run.bytes).map_err(|e| CliError::io(path, e))?;
    }
    match recorded.output {
        Some(out) if out.sha256 == digest => {
            eprintln!("reproduced {digest}");
            Ok(())
        }
        Some(out) => Err(CliError::new(
            code::FAILURE,
            format!("output digest {digest} differs from the recorded {}", out.sha256),
        )),
        None => Err(CliError::parse("manifest records no output digest")),
    }
}

fn run(args: Vec<String>) -> CliResult<()> {
    let cli = match parse(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Err(CliError::usage("")) } else { Ok(()) };
        }
    };
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    }
    if let Command::Replay(r) = &cli.command {
        return replay(&r.manifest_file, &cli.common);
    }
    let mut run = execute(&cli)?;
    run.manifest.args = args;
    manifest::emit(&run.bytes, cli.common.output.as_deref(), cli.common.manifest.as_deref(), run.manifest)
}

fn main() -> ExitCode {
    match run(std::env::args().skip(1).collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !e.message.is_empty() {
                eprintln!("heavytail: {e}");
            }
            ExitCode::from(e.code)
        }
    }
}
