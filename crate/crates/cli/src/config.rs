//! Run configuration: a JSON document holding every parameter of a run.
//! Command-line flags are applied on top of it and win.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use nonlocal_core::complexity::Registry;
use nonlocal_core::experiments::{ExperimentThresholds, SeedSet, DEFAULT_N};

use crate::CliError;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum GenKind {
    Zeros,
    Alternating,
    ThueMorse,
    Counter,
    Random,
    Promise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GameName {
    Pr,
    Chained,
    Magic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Nosig,
    Local,
    Signaling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ExpName {
    Theorem1,
    Theorem2,
    Theorem3,
    Magic,
    Locality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenParams {
    pub kind: Option<GenKind>,
    pub n: usize,
    pub q: u32,
    pub m: u32,
    pub out_b: Option<PathBuf>,
}

impl Default for GenParams {
    fn default() -> Self {
        Self { kind: None, n: DEFAULT_N, q: 2, m: 2, out_b: None }
    }
}

/// Inputs are read from `a`/`b` when given, otherwise drawn from the
/// input seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlayParams {
    pub game: GameName,
    pub m: Option<u32>,
    pub n: usize,
    pub a: Option<PathBuf>,
    pub b: Option<PathBuf>,
    pub strategy: StrategyKind,
    pub epsilon: f64,
    pub fa: Vec<u32>,
    pub fb: Vec<u32>,
    pub dir: Option<PathBuf>,
}

impl Default for PlayParams {
    fn default() -> Self {
        Self {
            game: GameName::Pr,
            m: None,
            n: DEFAULT_N,
            a: None,
            b: None,
            strategy: StrategyKind::Nosig,
            epsilon: 0.0,
            fa: Vec::new(),
            fb: Vec::new(),
            dir: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateParams {
    pub input: Option<PathBuf>,
    pub given: Vec<PathBuf>,
    pub mi: Option<PathBuf>,
    pub symmetric: bool,
    pub cmi_b: Option<PathBuf>,
    pub cmi_c: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NosigParams {
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalityParams {
    pub manifest: Option<PathBuf>,
    pub lambda: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    pub game: Option<GameName>,
    pub m: Option<u32>,
    pub reps: usize,
    pub fine: Option<PathBuf>,
    pub marginals: bool,
    /// Lower bound on the PR winning probability, as `p/q`.
    pub relax: Option<String>,
    pub no_ns: bool,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self { game: None, m: None, reps: 1, fine: None, marginals: false, relax: None, no_ns: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpParams {
    pub experiment: Option<ExpName>,
    pub n: usize,
    pub m: u32,
    pub epsilon: Option<f64>,
    pub strategy: StrategyKind,
    pub fa: Vec<u32>,
    pub fb: Vec<u32>,
    pub csv: Option<PathBuf>,
}

impl Default for ExpParams {
    fn default() -> Self {
        Self {
            experiment: None,
            n: DEFAULT_N,
            m: 8,
            epsilon: None,
            strategy: StrategyKind::Nosig,
            fa: Vec::new(),
            fb: Vec::new(),
            csv: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name", content = "params")]
pub enum CommandConfig {
    Gen(GenParams),
    Play(PlayParams),
    Estimate(EstimateParams),
    Nosig(NosigParams),
    Locality(LocalityParams),
    Oracle(OracleParams),
    Exp(ExpParams),
}

impl CommandConfig {
    pub fn name(&self) -> &'static str {
        match self {
            CommandConfig::Gen(_) => "gen",
            CommandConfig::Play(_) => "play",
            CommandConfig::Estimate(_) => "estimate",
            CommandConfig::Nosig(_) => "nosig",
            CommandConfig::Locality(_) => "locality",
            CommandConfig::Oracle(_) => "oracle",
            CommandConfig::Exp(_) => "exp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub command: CommandConfig,
    pub estimator: String,
    /// External compressors, name to shell command.
    #[serde(default)]
    pub estimators: Registry,
    #[serde(default)]
    pub thresholds: ExperimentThresholds,
    #[serde(default)]
    pub seeds: SeedSet,
    #[serde(default = "one")]
    pub jobs: usize,
    /// Main output file; standard output when absent.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn one() -> usize {
    1
}

impl RunConfig {
    pub fn new(command: CommandConfig) -> Self {
        Self {
            schema: SCHEMA,
            command,
            estimator: "lz77".into(),
            estimators: Registry::default(),
            thresholds: ExperimentThresholds::default(),
            seeds: SeedSet::default(),
            jobs: 1,
            out: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if cfg.schema != SCHEMA {
            return Err(CliError::Data(format!("unsupported config schema {}", cfg.schema)));
        }
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}
