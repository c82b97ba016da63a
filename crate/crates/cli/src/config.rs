//! Experiment configuration files.
//!
//! Every config names its game either as a path (relative to the config
//! file) or inline as a game document.

use std::path::{Path, PathBuf};

use magt_core::clri::AgentRates;
use magt_core::fictitious::TieRule;
use magt_core::nlevel::{AgentSpec, SocietyMode};
use magt_core::{load_document, LoadedGame, SymmetricGame};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::failure::{read_input, CliResult, Failure};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GameRef {
    Path(PathBuf),
    Inline(serde_json::Value),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FpFile {
    pub game: GameRef,
    /// `weights[agent][k][action]` over the agent's `k`-th opponent.
    #[serde(default)]
    pub weights: Option<Vec<Vec<Vec<f64>>>>,
    /// Uniform starting weight when `weights` is absent.
    #[serde(default = "one")]
    pub initial_weight: f64,
    #[serde(default)]
    pub budget: Option<usize>,
    #[serde(default)]
    pub convergence_window: Option<usize>,
    #[serde(default)]
    pub cycle_window: Option<usize>,
    #[serde(default)]
    pub tie_rule: TieRule,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplicatorFile {
    pub game: GameRef,
    /// Initial counts per strategy. At most one of `counts` and `shares`;
    /// uniform shares when both are absent.
    #[serde(default)]
    pub counts: Option<Vec<f64>>,
    #[serde(default)]
    pub shares: Option<Vec<f64>>,
    #[serde(default)]
    pub budget: Option<usize>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub confirm: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub probe: Option<ProbeFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeFile {
    /// Point to probe; the run's steady state when absent.
    #[serde(default)]
    pub candidate: Option<Vec<f64>>,
    #[serde(default)]
    pub eps_p: Option<f64>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub budget: Option<usize>,
    #[serde(default)]
    pub steady_eps: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClriFile {
    pub agents: Vec<AgentRates>,
    /// Constant volatility per agent. Exactly one of `volatility` and `impact`.
    #[serde(default)]
    pub volatility: Option<Vec<f64>>,
    /// `impact[j][i]`: effect of agent `j`'s changes on agent `i`'s target.
    #[serde(default)]
    pub impact: Option<Vec<Vec<f64>>>,
    pub states: usize,
    #[serde(default)]
    pub distribution: Option<Vec<f64>>,
    pub e0: Vec<f64>,
    pub steps: usize,
    pub trials: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SocietyFile {
    pub game: GameRef,
    pub roster: Vec<AgentSpec>,
    pub steps: usize,
    #[serde(default)]
    pub mode: SocietyMode,
    /// Independent runs; run `k` of a batch uses `derive_seed(seed, k)`.
    #[serde(default = "one_run")]
    pub runs: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn one_run() -> usize {
    1
}

pub fn load_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_input(path)?;
    serde_json::from_str(&text).map_err(|e| {
        Failure::input(format!(
            "{}: line {} column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

pub fn load_game_file(path: &Path) -> CliResult<LoadedGame> {
    let text = read_input(path)?;
    load_document(&text).map_err(|e| Failure::from(e).context(path.display()))
}

/// Resolves a game reference relative to the config at `config_path`.
pub fn resolve_game(game: &GameRef, config_path: &Path) -> CliResult<LoadedGame> {
    match game {
        GameRef::Path(p) => {
            let base = config_path.parent().unwrap_or(Path::new("."));
            load_game_file(&base.join(p))
        }
        GameRef::Inline(value) => {
            load_document(&value.to_string()).map_err(|e| Failure::from(e).context("inline game"))
        }
    }
}

/// The symmetric view of a loaded game, if it has one.
pub fn symmetric_view(loaded: &LoadedGame) -> Option<SymmetricGame> {
    loaded
        .symmetric
        .clone()
        .or_else(|| loaded.game.as_symmetric())
}

/// Command-line seed, else the config seed, else a named failure.
pub fn require_seed(flag: Option<u64>, config: Option<u64>, what: &str) -> CliResult<u64> {
    flag.or(config).ok_or_else(|| {
        Failure::input(format!(
            "{what} is randomized: set `seed` in the config or pass --seed"
        ))
    })
}
