//! JSON run configuration.
//!
//! ```json
//! {
//!   "problem": { "alpha": 0.3, "h1": 0.3, "h2": 0.5, "beta": 1.0,
//!                "l": 0.5, "t_final": 0.5,
//!                "source": { "kind": "sine", "amplitude": 1.0 } },
//!   "grid":    { "m_t": 128, "n_x": 64 },
//!   "study":   { "trajectories": 100, "levels": [16, 32, 64, 128], "fixed": 512 },
//!   "output":  { "snapshots": [32, 64] },
//!   "seed": 42
//! }
//! ```
//!
//! `grid` is needed by `solve` and `sample-noise`, `study` by `table`.
//! A run manifest is also accepted: its `config` member is used.

use std::path::Path;

use fracspde_core::convergence::{StudyConfig, StudyMode};
use fracspde_core::noise::HurstPair;
use fracspde_core::{Error as CoreError, NonlinearSource, ProblemSpec};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV: &str = "FRACSPDE_SEED";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed configuration: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

impl ConfigError {
    fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Field { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub problem: ProblemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudySection>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub alpha: f64,
    pub h1: f64,
    pub h2: f64,
    pub beta: f64,
    pub l: f64,
    pub t_final: f64,
    #[serde(default = "SourceConfig::zero")]
    pub source: SourceConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    Zero,
    Constant { value: f64 },
    Linear { slope: f64 },
    Sine { amplitude: f64 },
}

impl SourceConfig {
    fn zero() -> Self {
        SourceConfig::Zero
    }

    pub fn to_source(self) -> NonlinearSource {
        match self {
            SourceConfig::Zero => NonlinearSource::Zero,
            SourceConfig::Constant { value } => NonlinearSource::Constant(value),
            SourceConfig::Linear { slope } => NonlinearSource::Linear { slope },
            SourceConfig::Sine { amplitude } => NonlinearSource::Sine { amplitude },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub m_t: usize,
    pub n_x: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub trajectories: usize,
    pub levels: Vec<usize>,
    pub fixed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<usize>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let mut value: serde_json::Value = serde_json::from_str(text)?;
        if let Some(inner) = value.get_mut("config").map(serde_json::Value::take) {
            value = inner;
        }
        serde_path_to_error::deserialize(value).map_err(|e| ConfigError::Parse {
            path: e.path().to_string(),
            message: e.into_inner().to_string(),
        })
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec, ConfigError> {
        let p = &self.problem;
        let hurst = HurstPair::new(p.h1, p.h2).map_err(|e| core_field("problem", e))?;
        ProblemSpec::new(p.alpha, hurst, p.beta, p.l, p.t_final, p.source.to_source())
            .map_err(|e| core_field("problem", e))
    }

    pub fn grid(&self) -> Result<GridConfig, ConfigError> {
        let g = self.grid.ok_or_else(|| ConfigError::field("grid", "section is required for this command"))?;
        if g.m_t == 0 {
            return Err(ConfigError::field("grid.m_t", "must be at least 1"));
        }
        if g.n_x < 2 {
            return Err(ConfigError::field("grid.n_x", "must be at least 2"));
        }
        if let Some(s) = self.output.snapshots.iter().find(|&&s| s > g.m_t) {
            return Err(ConfigError::field("output.snapshots", format!("index {s} exceeds grid.m_t = {}", g.m_t)));
        }
        Ok(g)
    }

    pub fn study_config(&self, mode: StudyMode, seed: u64) -> Result<StudyConfig, ConfigError> {
        let spec = self.problem_spec()?;
        let s = self.study.as_ref().ok_or_else(|| ConfigError::field("study", "section is required for `table`"))?;
        let config = StudyConfig {
            spec,
            trajectories: s.trajectories,
            levels: s.levels.clone(),
            fixed: s.fixed,
            base_seed: seed,
            mode,
        };
        config.validate().map_err(|e| core_field("study", e))?;
        Ok(config)
    }

    /// CLI flag, then `FRACSPDE_SEED`, then the config file, then 42.
    pub fn resolve_seed(&self, flag: Option<u64>) -> Result<u64, ConfigError> {
        if let Some(seed) = flag {
            return Ok(seed);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| ConfigError::field(SEED_ENV, format!("not an unsigned integer: {v:?}"))),
            Err(_) => Ok(self.seed.unwrap_or(DEFAULT_SEED)),
        }
    }
}

fn core_field(section: &str, err: CoreError) -> ConfigError {
    match err {
        CoreError::InvalidParameter { name, reason } => ConfigError::field(format!("{section}.{name}"), reason),
        CoreError::StandingAssumption { .. } => {
            ConfigError::field(format!("{section}.alpha/h1/h2"), err.to_string())
        }
        other => ConfigError::field(section, other.to_string()),
    }
}

/// Parameter rows used by the built-in study presets.
pub fn preset(mode: StudyMode, alpha: f64, h1: f64, h2: f64, paper_scale: bool) -> Config {
    match mode {
        StudyMode::Temporal => Config {
            problem: ProblemConfig {
                alpha,
                h1,
                h2,
                beta: 1.0,
                l: 0.5,
                t_final: 0.5,
                source: SourceConfig::Sine { amplitude: 1.0 },
            },
            grid: None,
            study: Some(StudySection {
                trajectories: if paper_scale { 200 } else { 100 },
                levels: vec![16, 32, 64, 128],
                fixed: 512,
            }),
            output: OutputConfig::default(),
            seed: None,
        },
        StudyMode::Spatial => Config {
            problem: ProblemConfig {
                alpha,
                h1,
                h2,
                beta: 10.0,
                l: 0.1,
                t_final: 0.01,
                source: SourceConfig::Sine { amplitude: 1.0 / 50.0 },
            },
            grid: None,
            study: Some(StudySection {
                trajectories: if paper_scale { 100 } else { 50 },
                levels: vec![8, 16, 32, 64],
                fixed: if paper_scale { 2048 } else { 1024 },
            }),
            output: OutputConfig::default(),
            seed: None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "problem": {"alpha": 0.5, "h1": 0.5, "h2": 0.5, "beta": 0.0, "l": 1.0, "t_final": 1.0},
        "grid": {"m_t": 8, "n_x": 4}
    }"#;

    #[test]
    fn minimal_config_parses() {
        let c = Config::from_json(MINIMAL).unwrap();
        assert_eq!(c.problem.source, SourceConfig::Zero);
        c.problem_spec().unwrap();
        assert_eq!(c.grid().unwrap().m_t, 8);
    }

    #[test]
    fn alpha_rejection_names_field() {
        let text = MINIMAL.replace("\"alpha\": 0.5", "\"alpha\": 1.5");
        let err = Config::from_json(&text).unwrap().problem_spec().unwrap_err();
        assert!(err.to_string().starts_with("problem.alpha:"), "{err}");
    }

    #[test]
    fn assumption_rejection_mentions_assumption() {
        let text = MINIMAL.replace("\"h1\": 0.5, \"h2\": 0.5", "\"h1\": 0.05, \"h2\": 0.05").replace("0.5, \"h1\"", "0.9, \"h1\"");
        let err = Config::from_json(&text).unwrap().problem_spec().unwrap_err();
        assert!(err.to_string().contains("standing assumption"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = MINIMAL.replace("\"beta\"", "\"betta\": 1, \"beta\"");
        let err = Config::from_json(&text).unwrap_err();
        assert!(err.to_string().starts_with("problem.betta: unknown field"), "{err}");
    }

    #[test]
    fn manifest_wrapper_is_unwrapped() {
        let wrapped = format!(r#"{{"command": "solve", "config": {MINIMAL}}}"#);
        assert_eq!(Config::from_json(&wrapped).unwrap(), Config::from_json(MINIMAL).unwrap());
    }

    #[test]
    fn presets_validate() {
        for mode in [StudyMode::Temporal, StudyMode::Spatial] {
            for paper in [false, true] {
                preset(mode, 0.3, 0.3, 0.5, paper).study_config(mode, 1).unwrap();
            }
        }
    }
}
