//! JSON run configuration. Every field has a default, so `{}` is a valid config that
//! describes the DIAG problem with the flexible, neutral, adaptive agent.

use std::path::Path;

use brc_core::diag::{build_diag, Boundedness, DiagConfig, INCORRECT_CELLS};
use brc_core::{
    mix_seed, BrcParams, DynamicsModel, Environment, InferenceConfig, IrlBaselineConfig,
    ProblemSetting, SolveOptions,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Seed stream for simulated datasets.
pub const SIMULATE_STREAM: u64 = 1;
/// Seed stream for descriptive-parameter chains; chain `c` uses `mix_seed(stream seed, c)`.
pub const INFER_STREAM: u64 = 2;
/// Seed stream for reward-learning baseline chains.
pub const IRL_STREAM: u64 = 3;

/// A problem given explicitly instead of through the DIAG builder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomProblem {
    pub setting: ProblemSetting,
    pub params: BrcParams,
    /// Dynamics of the environment that generates data.
    pub truth: DynamicsModel,
    #[serde(default = "default_max_length")]
    pub max_episode_length: usize,
}

fn default_max_length() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub resolution: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolveOptions::default();
        Self {
            resolution: o.resolution,
            tolerance: o.tolerance,
            max_iterations: o.max_iterations,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            resolution: self.resolution,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub n: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { n: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub diag: DiagConfig,
    /// Planning multipliers applied to the DIAG parameter template.
    pub boundedness: Boundedness,
    /// Replace the DIAG model grid by certainty about the true model.
    pub certain_model: bool,
    /// Overrides `diag`, `boundedness` and `certain_model` entirely.
    pub custom: Option<CustomProblem>,
    pub solver: SolverConfig,
    pub simulate: SimulateConfig,
    pub inference: InferenceConfig,
    pub irl: IrlBaselineConfig,
    /// Master seed; components derive their own streams from it.
    pub seed: u64,
}

/// The concrete problem a config describes.
#[derive(Debug, Clone)]
pub struct Problem {
    pub setting: ProblemSetting,
    pub params: BrcParams,
    pub truth: DynamicsModel,
    pub max_episode_length: usize,
    pub is_diag: bool,
}

impl Problem {
    pub fn environment(&self) -> Environment {
        Environment {
            setting: self.setting.clone(),
            truth: self.truth.clone(),
            utility: self.params.utility.clone(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading config {}", path.display()), e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    pub fn problem(&self) -> CliResult<Problem> {
        if let Some(custom) = &self.custom {
            return Ok(Problem {
                setting: custom.setting.clone(),
                params: custom.params.clone(),
                truth: custom.truth.clone(),
                max_episode_length: custom.max_episode_length,
                is_diag: false,
            });
        }
        let diag = build_diag(&self.diag)?;
        let params = if self.certain_model {
            diag.certain_params_with(self.boundedness)
        } else {
            diag.params_with(self.boundedness)
        };
        Ok(Problem {
            setting: diag.setting,
            params,
            truth: diag.truth,
            max_episode_length: self.diag.max_episode_length,
            is_diag: true,
        })
    }

    /// Fills DIAG's incorrect-decision cells when a reward target has none.
    pub fn resolve_utility_cells(&mut self, problem: &Problem) {
        if self.inference.utility_cells.is_empty() && problem.is_diag {
            self.inference.utility_cells = INCORRECT_CELLS.to_vec();
        }
    }

    pub fn stream_seed(&self, stream: u64) -> u64 {
        mix_seed(self.seed, stream)
    }
}
