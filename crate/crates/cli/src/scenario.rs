//! Scenario files: UTF-8 JSON, snake_case keys.
//!
//! ```json
//! {
//!   "name": "akerlof",
//!   "mode": "game",
//!   "agents": [
//!     {
//!       "utility": {"quadratic": {"a": 2, "b": 4, "k": 5}},
//!       "c1": {"linear": {"d": 4}},
//!       "c2": "zero",
//!       "form": {"w_u": 1, "w_1": 1, "w_2": 1},
//!       "beliefs": [{"atoms": [[1, 1]]}]
//!     }
//!   ],
//!   "grid": {"x_max": 8, "steps": 1600},
//!   "tolerance": 1e-9,
//!   "output_dir": "out"
//! }
//! ```
//!
//! Single-agent scenarios carry exactly one agent and an `x_s`; game
//! scenarios carry at least two agents, optional aggregators and no `x_s`.
//! The grid bound doubles as the game's strategy bound.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use deferral_core::model::DEFAULT_STEPS;
use deferral_core::{AgentSpec, BeliefAggregator, ChoiceAggregator, GameSpec, Grid, Validate};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    SingleAgent,
    Game,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    pub x_max: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

fn default_steps() -> usize {
    DEFAULT_STEPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub mode: Mode,
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub x_s: Option<f64>,
    pub grid: GridParams,
    #[serde(default)]
    pub choice_aggregator: Option<ChoiceAggregator>,
    #[serde(default)]
    pub belief_aggregator: Option<BeliefAggregator>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl Scenario {
    pub fn parse(text: &str) -> CliResult<Self> {
        let s: Scenario = serde_json::from_str(text)
            .map_err(|e| CliError::Validation(format!("scenario: {e}")))?;
        s.check()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut s = Scenario::parse(&text)?;
        if s.name.is_none() {
            s.name = path.file_stem().map(|n| n.to_string_lossy().into_owned());
        }
        Ok(s)
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or("scenario")
    }

    pub fn grid(&self) -> CliResult<Grid> {
        Ok(Grid::new(self.grid.x_max, self.grid.steps)?)
    }

    /// Enforces the mode-specific field set and the model invariants.
    fn check(&self) -> CliResult<()> {
        let bad = |m: &str| Err(CliError::Validation(m.to_string()));
        match self.mode {
            Mode::SingleAgent => {
                if self.agents.len() != 1 {
                    return bad("single_agent scenarios need exactly one agent");
                }
                if self.x_s.is_none() {
                    return bad("single_agent scenarios need x_s");
                }
                if self.choice_aggregator.is_some() || self.belief_aggregator.is_some() {
                    return bad("aggregators only apply to game scenarios");
                }
                self.agents[0].validate()?;
                let x_s = self.x_s.unwrap_or_default();
                if !(x_s >= 0.0 && x_s.is_finite()) {
                    return bad("x_s must be a nonnegative number");
                }
            }
            Mode::Game => {
                if self.x_s.is_some() {
                    return bad("game scenarios take no x_s; the reference point comes from the other agents");
                }
                self.game()?.validate()?;
            }
        }
        self.grid()?;
        if let Some(t) = self.tolerance {
            if !(t >= 0.0 && t.is_finite()) {
                return bad("tolerance must be a nonnegative number");
            }
        }
        Ok(())
    }

    pub fn agent(&self) -> CliResult<(&AgentSpec, f64)> {
        match (self.mode, self.x_s) {
            (Mode::SingleAgent, Some(x_s)) => Ok((&self.agents[0], x_s)),
            _ => Err(CliError::Validation(
                "this command needs a single_agent scenario".into(),
            )),
        }
    }

    pub fn game(&self) -> CliResult<GameSpec> {
        if self.mode != Mode::Game {
            return Err(CliError::Validation(
                "this command needs a game scenario".into(),
            ));
        }
        Ok(GameSpec {
            agents: self.agents.clone(),
            choice_aggregator: self.choice_aggregator.clone().unwrap_or_default(),
            belief_aggregator: self.belief_aggregator.clone().unwrap_or_default(),
            x_max: self.grid.x_max,
        })
    }
}

/// A strategy profile file: `{"choices": [3.75, 4.0]}`.
pub fn load_profile(path: &Path) -> CliResult<deferral_core::StrategyProfile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}
