//! Flat model configuration shared by the `key = value` and JSON formats.
//!
//! Recognised keys: `kind`, `theta`, `alpha0`, `alpha`, `beta`, `innovation`,
//! `q`, `nu`, `burn_in`, `seed`. Lists (`alpha`, `beta`) are comma separated
//! in the plain-text format.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::innovation::InnovationLaw;
use super::model::{ModelKind, ModelSpec, DEFAULT_BURN_IN};
use crate::error::{Result, TailError};

pub const DEFAULT_FRECHET_Q: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
    pub innovation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn config_err(msg: impl Into<String>) -> TailError {
    TailError::Config(msg.into())
}

fn require(value: Option<f64>, key: &str, kind: &str) -> Result<f64> {
    value.ok_or_else(|| config_err(format!("key `{key}` is required for kind `{kind}`")))
}

impl ModelConfig {
    pub fn to_spec(&self) -> Result<ModelSpec> {
        let kind = match self.kind.as_str() {
            "iid" => ModelKind::Iid,
            "ar1" => ModelKind::Ar1 { theta: require(self.theta, "theta", "ar1")? },
            "ma1" => ModelKind::Ma1 { theta: require(self.theta, "theta", "ma1")? },
            "garch" => ModelKind::Garch {
                alpha0: require(self.alpha0, "alpha0", "garch")?,
                alpha: self
                    .alpha
                    .clone()
                    .ok_or_else(|| config_err("key `alpha` is required for kind `garch`"))?,
                beta: self.beta.clone().unwrap_or_default(),
            },
            other => {
                return Err(config_err(format!(
                    "key `kind`: unknown model `{other}` (expected iid, ar1, ma1 or garch)"
                )))
            }
        };
        let innovation = match self.innovation.as_str() {
            "frechet_mixture" | "frechet" => InnovationLaw::FrechetMixture {
                q: self.q.unwrap_or(DEFAULT_FRECHET_Q),
            },
            "student_t" | "student_t_standardized" => InnovationLaw::StudentT {
                nu: self
                    .nu
                    .ok_or_else(|| config_err("key `nu` is required for student_t innovations"))?,
            },
            other => {
                return Err(config_err(format!(
                    "key `innovation`: unknown law `{other}` (expected frechet_mixture or student_t)"
                )))
            }
        };
        let spec = ModelSpec {
            kind,
            innovation,
            burn_in: self.burn_in.unwrap_or(DEFAULT_BURN_IN),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_spec(spec: &ModelSpec, seed: Option<u64>) -> Self {
        let mut cfg = ModelConfig {
            kind: String::new(),
            theta: None,
            alpha0: None,
            alpha: None,
            beta: None,
            innovation: String::new(),
            q: None,
            nu: None,
            burn_in: Some(spec.burn_in),
            seed,
        };
        match &spec.kind {
            ModelKind::Iid => cfg.kind = "iid".into(),
            ModelKind::Ar1 { theta } => {
                cfg.kind = "ar1".into();
                cfg.theta = Some(*theta);
            }
            ModelKind::Ma1 { theta } => {
                cfg.kind = "ma1".into();
                cfg.theta = Some(*theta);
            }
            ModelKind::Garch { alpha0, alpha, beta } => {
                cfg.kind = "garch".into();
                cfg.alpha0 = Some(*alpha0);
                cfg.alpha = Some(alpha.clone());
                cfg.beta = Some(beta.clone());
            }
        }
        match spec.innovation {
            InnovationLaw::FrechetMixture { q } => {
                cfg.innovation = "frechet_mixture".into();
                cfg.q = Some(q);
            }
            InnovationLaw::StudentT { nu } => {
                cfg.innovation = "student_t".into();
                cfg.nu = Some(nu);
            }
        }
        cfg
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn from_key_value(text: &str) -> Result<Self> {
        let map = parse_key_value(text, &CONFIG_KEYS)?;
        serde_json::from_value(Value::Object(map)).map_err(|e| config_err(e.to_string()))
    }

    /// JSON when the first non-blank character is `{`, `key = value` otherwise.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text)
        } else {
            Self::from_key_value(text)
        }
    }
}

/// How a `key = value` entry is typed when converted to JSON.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Text,
    Number,
    Integer,
    NumberList,
    IntegerList,
}

const CONFIG_KEYS: [(&str, ValueKind); 10] = [
    ("kind", ValueKind::Text),
    ("theta", ValueKind::Number),
    ("alpha0", ValueKind::Number),
    ("alpha", ValueKind::NumberList),
    ("beta", ValueKind::NumberList),
    ("innovation", ValueKind::Text),
    ("q", ValueKind::Number),
    ("nu", ValueKind::Number),
    ("burn_in", ValueKind::Integer),
    ("seed", ValueKind::Integer),
];

/// Turns `key = value` text into a JSON object using a key schema. Unknown or
/// repeated keys and unparseable values are reported with their key and line.
pub fn parse_key_value(text: &str, schema: &[(&str, ValueKind)]) -> Result<Map<String, Value>> {
    let mut map = Map::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("line {}: expected `key = value`", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        let kind = schema
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, kind)| *kind)
            .ok_or_else(|| config_err(format!("line {}: unknown key `{key}`", lineno + 1)))?;
        let bad = |what: &str| config_err(format!("line {}: key `{key}`: {what} `{value}`", lineno + 1));
        let parsed = match kind {
            ValueKind::Text => Value::String(value.to_string()),
            ValueKind::Number => number(value).ok_or_else(|| bad("not a number"))?,
            ValueKind::Integer => integer(value).ok_or_else(|| bad("not a non-negative integer"))?,
            ValueKind::NumberList | ValueKind::IntegerList => {
                let items = value
                    .trim_start_matches('[')
                    .trim_end_matches(']')
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| if kind == ValueKind::NumberList { number(s) } else { integer(s) })
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| bad("not a list of numbers"))?;
                Value::Array(items)
            }
        };
        if map.insert(key.to_string(), parsed).is_some() {
            return Err(config_err(format!("line {}: key `{key}` repeated", lineno + 1)));
        }
    }
    Ok(map)
}

fn number(s: &str) -> Option<Value> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .and_then(serde_json::Number::from_f64)
        .map(Value::Number)
}

fn integer(s: &str) -> Option<Value> {
    s.parse::<u64>().ok().map(|v| Value::Number(v.into()))
}
