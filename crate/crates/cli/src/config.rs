use std::path::{Path, PathBuf};

use expfun::estimator::{TargetFunction, TiltMode};
use expfun::LevySpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SEED_ENV: &str = "LEVY_EXPFUN_SEED";
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometric {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Times {
    List(Vec<f64>),
    Range { geometric: Geometric },
}

impl Times {
    pub fn resolve(&self) -> Result<Vec<f64>, CliError> {
        let ts = match self {
            Times::List(v) => v.clone(),
            Times::Range { geometric: g } => {
                if !(g.start > 0.0 && g.stop > g.start && g.count >= 2) {
                    return Err(CliError::Usage(format!(
                        "geometric range needs 0 < start < stop and count ≥ 2, got {g:?}"
                    )));
                }
                let ratio = g.stop / g.start;
                (0..g.count).map(|k| g.start * ratio.powf(k as f64 / (g.count - 1) as f64)).collect()
            }
        };
        if ts.is_empty() || ts[0] <= 0.0 || ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Usage("times must be positive and strictly increasing".into()));
        }
        Ok(ts)
    }

    /// `1,2,4` or `geom:start:stop:count`.
    pub fn parse_flag(s: &str) -> Result<Self, CliError> {
        if let Some(rest) = s.strip_prefix("geom:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(CliError::Usage(format!("expected geom:start:stop:count, got {s}")));
            }
            let num = |x: &str| x.parse::<f64>().map_err(|e| CliError::Usage(format!("bad number {x}: {e}")));
            let count = parts[2].parse::<usize>().map_err(|e| CliError::Usage(format!("bad count: {e}")))?;
            return Ok(Times::Range { geometric: Geometric { start: num(parts[0])?, stop: num(parts[1])?, count } });
        }
        s.split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| CliError::Usage(format!("bad time {x}: {e}"))))
            .collect::<Result<Vec<_>, _>>()
            .map(Times::List)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Everything a run can be configured with. Flags override the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<LevySpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<LevySpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetFunction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Times>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tilt: Option<TiltMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing)]
    pub output: OutputSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_tail: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        parse_json(&text, &format!("config {}", path.display()))
    }

    /// sha256 of the serialized effective config.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v.trim().parse().map_err(|e| CliError::Usage(format!("{SEED_ENV}={v}: {e}"))),
            Err(_) => Ok(DEFAULT_SEED),
        }
    }
}

/// Deserializes JSON and reports the failing field path.
pub fn parse_json<T: DeserializeOwned>(text: &str, what: &str) -> Result<T, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Schema { what: what.to_string(), path, message: e.into_inner().to_string() }
    })
}

/// A JSON literal if the argument starts with `{`, otherwise a file path.
pub fn json_arg<T: DeserializeOwned>(arg: &str, what: &str) -> Result<T, CliError> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') {
        parse_json(trimmed, what)
    } else {
        let text = std::fs::read_to_string(arg).map_err(|e| CliError::Io(arg.to_string(), e))?;
        parse_json(&text, what)
    }
}
