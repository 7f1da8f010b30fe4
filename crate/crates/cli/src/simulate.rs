use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use heavytail::io::fmt_num;
use heavytail::tsgen::{benchmark_model, generate, ModelConfig, SeededStream};

use crate::error::{CliError, CliResult};
use crate::manifest::read_text;
use crate::{to_json_bytes, Common, Format, Run};

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    /// Model file, `key = value` lines or JSON
    #[arg(long, required_unless_present = "benchmark", conflicts_with = "benchmark")]
    pub config: Option<PathBuf>,
    /// Benchmark model 1 to 5
    #[arg(long)]
    pub benchmark: Option<u8>,
    /// Series length; defaults to the benchmark length
    #[arg(long, short)]
    pub n: Option<usize>,
}

pub fn run(args: &SimulateArgs, common: &Common) -> CliResult<Run> {
    let mut inputs = Vec::new();
    let (spec, file_seed, default_n) = match (&args.config, args.benchmark) {
        (Some(path), _) => {
            let cfg = ModelConfig::parse(&read_text(path, &mut inputs)?)
                .map_err(|e| CliError::from(e).context(path.display()))?;
            (cfg.to_spec()?, cfg.seed, None)
        }
        (None, Some(id)) => {
            let m = benchmark_model(id)?;
            (m.spec, None, Some(m.series_len))
        }
        (None, None) => return Err(CliError::usage("give --config or --benchmark")),
    };
    for w in spec.warnings() {
        eprintln!("warning: {w}");
    }
    let n = args.n.or(default_n).ok_or_else(|| CliError::usage("--n is required with --config"))?;
    let seed = common.seed.or(file_seed).unwrap_or(0);
    let values = generate(&spec, n, &SeededStream::new(seed))?;

    let bytes = match common.format {
        Format::Csv => {
            let mut s = String::from("value\n");
            for v in &values {
                s.push_str(&fmt_num(*v));
                s.push('\n');
            }
            s.into_bytes()
        }
        Format::Json => to_json_bytes(&json!({ "value": values })),
    };
    let config = json!({
        "model": ModelConfig::from_spec(&spec, Some(seed)),
        "benchmark": args.benchmark,
        "n": n,
        "format": format!("{:?}", common.format).to_lowercase(),
    });
    Ok(Run::new("simulate", Some(seed), config, inputs, bytes))
}
