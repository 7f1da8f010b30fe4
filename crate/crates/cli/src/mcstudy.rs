use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::Args;
use serde_json::json;

use heavytail::mc_study::{run_study_with_limits, RunLimits, StudyFile};

use crate::error::{CliError, CliResult};
use crate::manifest::read_text;
use crate::{to_json_bytes, Common, Format, Run};

#[derive(Args, Debug, Clone)]
pub struct McstudyArgs {
    /// Study file, `key = value` lines or JSON
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the file's replication count
    #[arg(long)]
    pub replications: Option<usize>,
    /// Refuse to run more replications than this
    #[arg(long)]
    pub max_replications: Option<usize>,
    /// Abort when the run exceeds this many seconds
    #[arg(long)]
    pub time_budget: Option<f64>,
}

pub fn run(args: &McstudyArgs, common: &Common) -> CliResult<Run> {
    let mut inputs = Vec::new();
    let text = read_text(&args.config, &mut inputs)?;
    let mut file = StudyFile::parse(&text).map_err(|e| CliError::from(e).context(args.config.display()))?;
    if common.seed.is_some() {
        file.seed = common.seed;
    }
    if args.replications.is_some() {
        file.replications = args.replications;
    }
    let config = file.into_config().map_err(|e| CliError::from(e).context(args.config.display()))?;
    for w in config.spec.warnings() {
        eprintln!("warning: {w}");
    }
    let deadline = match args.time_budget {
        Some(s) if s.is_finite() && s > 0.0 => Some(Instant::now() + Duration::from_secs_f64(s)),
        Some(s) => return Err(CliError::usage(format!("--time-budget {s} must be a positive number of seconds"))),
        None => None,
    };
    let limits = RunLimits { max_replications: args.max_replications, deadline };
    let result = run_study_with_limits(&config, limits)?;
    if result.xi_fallbacks > 0 {
        eprintln!("note: {} of {} replications used the canonical xi", result.xi_fallbacks, result.replications);
    }
    let bytes = match common.format {
        Format::Csv => {
            let mut buf = Vec::new();
            result.write_csv(&mut buf)?;
            buf
        }
        Format::Json => to_json_bytes(&result),
    };
    let resolved = json!({
        "study": config,
        "max_replications": args.max_replications,
        "time_budget": args.time_budget,
        "format": format!("{:?}", common.format).to_lowercase(),
    });
    Ok(Run::new("mcstudy", Some(config.seed), resolved, inputs, bytes))
}
