//! Experiment configuration and the flat `key = value` settings format.
//!
//! A settings file holds one `key = value` pair per line; blank lines and
//! lines starting with `#` are ignored. Keys are the long command-line flag
//! names without the leading dashes, so a file and a command line can be
//! merged by inserting flag values over file values.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimators::{EstimatorKind, PriorSpec};
use crate::gwishart::PriorOverK;
use crate::matrix::NormKind;
use crate::scenarios::{Scenario, ScenarioKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bandwidth {
    Fixed(usize),
    /// Posterior mode over `0..=k_max` (default `min(p - 1, n - 2, 50)`).
    Auto { k_max: Option<usize> },
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bandwidth::Fixed(k) => write!(f, "{k}"),
            Bandwidth::Auto { k_max: None } => f.write_str("auto"),
            Bandwidth::Auto { k_max: Some(m) } => write!(f, "auto:{m}"),
        }
    }
}

impl std::str::FromStr for Bandwidth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "auto" {
            return Ok(Bandwidth::Auto { k_max: None });
        }
        if let Some(m) = s.strip_prefix("auto:") {
            return Ok(Bandwidth::Auto {
                k_max: Some(parse_value("k-max", m)?),
            });
        }
        Ok(Bandwidth::Fixed(parse_value("k", s)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub estimators: Vec<EstimatorKind>,
    pub bandwidth: Bandwidth,
    pub prior: PriorSpec,
    pub rho_prior: PriorOverK,
    pub norms: Vec<NormKind>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.estimators.is_empty() {
            return Err(invalid("at least one estimator is required"));
        }
        if self.norms.is_empty() {
            return Err(invalid("at least one norm is required"));
        }
        PriorSpec::new(self.prior.delta)?;
        let p = self.scenario.p;
        match self.bandwidth {
            Bandwidth::Fixed(k) if k >= p => Err(invalid(format!(
                "bandwidth k = {k} must be at most p - 1 = {}",
                p - 1
            ))),
            Bandwidth::Auto { k_max: Some(m) } if m >= p => Err(invalid(format!(
                "k-max = {m} must be at most p - 1 = {}",
                p - 1
            ))),
            _ => Ok(()),
        }
    }

    /// Builds a configuration from settings; absent keys take defaults
    /// (AR(1) with rho = 0.3, n = 100, p = 50, 100 replications, seed 1,
    /// the four table estimators, all norms, automatic bandwidth).
    pub fn from_settings(settings: &Settings) -> Result<Self> {
        let model = settings.get("model").unwrap_or("ar1");
        let kind = match model.to_ascii_lowercase().as_str() {
            "ar1" => ScenarioKind::Ar1 {
                rho: settings.parse_or("rho", 0.3)?,
            },
            "ar4" => ScenarioKind::Ar4,
            "fgn" => ScenarioKind::Fgn {
                hurst: settings.parse_or("hurst", 0.7)?,
            },
            other => return Err(invalid(format!("unknown model `{other}`"))),
        };
        let scenario = Scenario {
            kind,
            n: settings.parse_or("n", 100)?,
            p: settings.parse_or("p", 50)?,
            replications: settings.parse_or("reps", 100)?,
            seed: settings.parse_or("seed", 1)?,
        };
        let estimators = match settings.get("estimator").or(settings.get("estimators")) {
            Some(list) => parse_list(list)?,
            None => EstimatorKind::TABLE.to_vec(),
        };
        let norms = match settings.get("norms") {
            Some(list) => parse_list(list)?,
            None => NormKind::ALL.to_vec(),
        };
        let auto: bool = settings.parse_or("auto-k", false)?;
        let k_max: Option<usize> = settings.get("k-max").map(|v| parse_value("k-max", v)).transpose()?;
        let bandwidth = match (auto, settings.get("k")) {
            (false, Some(k)) => Bandwidth::Fixed(parse_value("k", k)?),
            _ => Bandwidth::Auto { k_max },
        };
        let prior = PriorSpec::new(settings.parse_or("delta", PriorSpec::DEFAULT_DELTA)?)?;
        let rho_prior = settings.get("rho-prior").unwrap_or("exp-quartic").parse()?;
        let cfg = ExperimentConfig {
            scenario,
            estimators,
            bandwidth,
            prior,
            rho_prior,
            norms,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_list<T: std::str::FromStr<Err = Error>>(list: &str) -> Result<Vec<T>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| invalid(format!("invalid value `{value}` for `{key}`")))
}

/// Ordered string settings, as read from a file and/or flags.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings(BTreeMap<String, String>);

/// Keys accepted in settings files.
pub const KNOWN_KEYS: &[&str] = &[
    "data",
    "model",
    "rho",
    "hurst",
    "n",
    "p",
    "reps",
    "seed",
    "estimators",
    "estimator",
    "k",
    "auto-k",
    "k-max",
    "delta",
    "rho-prior",
    "norms",
    "format",
    "output",
    "header",
    "center",
    "draws",
    "threads",
];

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: idx + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err("expected `key = value`".into()))?;
            let key = key.trim().trim_start_matches("--").to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(parse_err(format!("unknown key `{key}`")));
            }
            map.insert(key, value.trim().to_string());
        }
        Ok(Settings(map))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Inserts or overrides a value.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            Some(v) => parse_value(key, v),
            None => Ok(default),
        }
    }

    pub fn output(&self) -> Option<PathBuf> {
        self.get("output").map(PathBuf::from)
    }
}
