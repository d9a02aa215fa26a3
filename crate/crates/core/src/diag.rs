//! The diagnostic environment: a patient is diseased or healthy, each monitoring step
//! yields a noisy test result, and the episode ends with a diseased or healthy call.
//! With the agent certain about the true model this is the classic tiger problem.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{BrcError, Result};
use crate::math::{exp, round};
use crate::model::{
    BeliefPriorMode, Belief, BrcParams, DiscreteDistribution, DynamicsModel, ModelEnsemble,
    ProblemSetting,
};
use crate::simulate::Environment;

pub const DISEASED: usize = 0;
pub const HEALTHY: usize = 1;

pub const POSITIVE: usize = 0;
pub const NEGATIVE: usize = 1;

pub const MONITOR: usize = 0;
pub const DECLARE_DISEASED: usize = 1;
pub const DECLARE_HEALTHY: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagConfig {
    pub monitor_cost: f64,
    pub correct_reward: f64,
    pub incorrect_reward: f64,
    pub discount: f64,
    /// Test accuracy in both directions, `P(x+|s+) = P(x-|s-)`.
    pub true_accuracy: f64,
    pub initial_disease_probability: f64,
    /// Step between neighbouring accuracies in the candidate-model grid.
    pub grid_increment: f64,
    /// Grid levels on each side of the true accuracy, per axis.
    pub grid_steps_each_way: usize,
    pub max_episode_length: usize,
}

impl Default for DiagConfig {
    fn default() -> Self {
        Self {
            monitor_cost: -1.0,
            correct_reward: 10.0,
            incorrect_reward: -36.0,
            discount: 0.95,
            true_accuracy: 0.7,
            initial_disease_probability: 0.5,
            grid_increment: 0.1,
            grid_steps_each_way: 2,
            max_episode_length: 50,
        }
    }
}

impl DiagConfig {
    pub fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(BrcError::InvalidArgument(msg.to_string()));
        if ![self.monitor_cost, self.correct_reward, self.incorrect_reward]
            .iter()
            .all(|v| v.is_finite())
        {
            return bad("rewards must be finite");
        }
        if !(0.0..1.0).contains(&self.discount) {
            return bad("discount must lie in [0, 1)");
        }
        if !(self.true_accuracy > 0.0 && self.true_accuracy < 1.0) {
            return bad("true accuracy must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.initial_disease_probability) {
            return bad("initial disease probability must lie in [0, 1]");
        }
        if !(self.grid_increment > 0.0) && self.grid_steps_each_way > 0 {
            return bad("grid increment must be positive");
        }
        if self.max_episode_length == 0 {
            return bad("max episode length must be at least 1");
        }
        let span = self.grid_increment * self.grid_steps_each_way as f64;
        if self.true_accuracy - span <= 0.0 || self.true_accuracy + span >= 1.0 {
            return Err(BrcError::InvalidArgument(format!(
                "accuracy grid {} ± {span} leaves (0, 1)",
                self.true_accuracy
            )));
        }
        Ok(())
    }

    /// Accuracy levels along one grid axis, lowest first.
    pub fn accuracy_levels(&self) -> Vec<f64> {
        let n = self.grid_steps_each_way as i64;
        (-n..=n)
            .map(|i| round((self.true_accuracy + i as f64 * self.grid_increment) * 1e12) / 1e12)
            .collect()
    }

    /// `incorrect / correct`: the normative cost-benefit ratio.
    pub fn cost_benefit_ratio(&self) -> f64 {
        self.incorrect_reward / self.correct_reward
    }

    pub fn utility(&self) -> Vec<Vec<f64>> {
        let (c, w, m) = (self.correct_reward, self.incorrect_reward, self.monitor_cost);
        // rows: diseased, healthy; columns: monitor, declare diseased, declare healthy
        vec![vec![m, c, w], vec![m, w, c]]
    }
}

/// Utility cells that receive the incorrect-diagnosis reward, as `(state, action)`.
pub const INCORRECT_CELLS: [(usize, usize); 2] =
    [(DISEASED, DECLARE_HEALTHY), (HEALTHY, DECLARE_DISEASED)];

/// Decision, specification and recognition multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boundedness {
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
}

impl Boundedness {
    pub const fn new(alpha: f64, beta: f64, eta: f64) -> Self {
        Self { alpha, beta, eta }
    }

    /// Flexible, neutral, adaptive.
    pub const BASELINE: Self = Self::new(0.5, 1e3, 1e-3);
    pub const VERY_FLEXIBLE: Self = Self::new(1e-3, 1e3, 1e-3);
    pub const INFLEXIBLE: Self = Self::new(10.0, 1e3, 1e-3);
    pub const OPTIMISTIC: Self = Self::new(0.5, 1.25, 1e-3);
    pub const PESSIMISTIC: Self = Self::new(0.5, -0.75, 1e-3);
    pub const NON_ADAPTIVE: Self = Self::new(0.5, 1e3, 75.0);

    pub fn apply(self, params: &mut BrcParams) {
        params.alpha = self.alpha;
        params.beta = self.beta;
        params.eta = self.eta;
    }
}

impl Default for Boundedness {
    fn default() -> Self {
        Self::BASELINE
    }
}

/// Candidate model with static disease state and the given test accuracies.
pub fn diag_model(accuracy_positive: f64, accuracy_negative: f64) -> Result<DynamicsModel> {
    let stay = |s: usize| -> Vec<Vec<f64>> {
        (0..3)
            .map(|_| {
                let mut row = vec![0.0; 2];
                row[s] = 1.0;
                row
            })
            .collect()
    };
    let transition = vec![stay(DISEASED), stay(HEALTHY)];
    let monitor = vec![
        vec![accuracy_positive, 1.0 - accuracy_positive],
        vec![1.0 - accuracy_negative, accuracy_negative],
    ];
    let uninformative = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
    let emission = vec![monitor, uninformative.clone(), uninformative];
    DynamicsModel::new(transition, emission)
}

pub fn diag_setting() -> ProblemSetting {
    ProblemSetting {
        num_states: 2,
        num_observations: 2,
        num_actions: 3,
        terminal_actions: BTreeSet::from([DECLARE_DISEASED, DECLARE_HEALTHY]),
        state_labels: vec!["diseased".into(), "healthy".into()],
        observation_labels: vec!["positive".into(), "negative".into()],
        action_labels: vec![
            "monitor".into(),
            "declare_diseased".into(),
            "declare_healthy".into(),
        ],
    }
}

/// Candidate models over the accuracy grid, row-major in
/// `(positive-accuracy level, negative-accuracy level)`, with a discretized isotropic
/// Gaussian prior of one grid step standard deviation centred on the truth.
pub fn build_model_grid(config: &DiagConfig) -> Result<ModelEnsemble> {
    config.check()?;
    let levels = config.accuracy_levels();
    let centre = config.grid_steps_each_way as f64;
    let mut models = Vec::with_capacity(levels.len() * levels.len());
    let mut weights = Vec::with_capacity(levels.len() * levels.len());
    for (i, &a_pos) in levels.iter().enumerate() {
        for (j, &a_neg) in levels.iter().enumerate() {
            models.push(diag_model(a_pos, a_neg)?);
            let (di, dj) = (i as f64 - centre, j as f64 - centre);
            weights.push(exp(-0.5 * (di * di + dj * dj)));
        }
    }
    ModelEnsemble::new(models, DiscreteDistribution::from_unnormalized(weights)?)
}

/// Index of the true model in [`build_model_grid`].
pub fn true_model_index(config: &DiagConfig) -> usize {
    let n = 2 * config.grid_steps_each_way + 1;
    config.grid_steps_each_way * n + config.grid_steps_each_way
}

/// A complete DIAG instance: setting, true environment, and a parameter template with
/// the baseline boundedness, uniform action prior and the grid model prior.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagProblem {
    pub setting: ProblemSetting,
    pub truth: DynamicsModel,
    pub params: BrcParams,
    pub config: DiagConfig,
}

impl DiagProblem {
    pub fn environment(&self) -> Environment {
        Environment {
            setting: self.setting.clone(),
            truth: self.truth.clone(),
            utility: self.params.utility.clone(),
        }
    }

    pub fn params_with(&self, boundedness: Boundedness) -> BrcParams {
        let mut p = self.params.clone();
        boundedness.apply(&mut p);
        p
    }

    /// Parameters whose ensemble is certain about the true model.
    pub fn certain_params_with(&self, boundedness: Boundedness) -> BrcParams {
        let mut p = self.params_with(boundedness);
        p.model_ensemble = ModelEnsemble::single(self.truth.clone());
        p
    }
}

pub fn build_diag(config: &DiagConfig) -> Result<DiagProblem> {
    config.check()?;
    let setting = diag_setting();
    let truth = diag_model(config.true_accuracy, config.true_accuracy)?;
    let b = Boundedness::BASELINE;
    let params = BrcParams {
        utility: config.utility(),
        discount: config.discount,
        alpha: b.alpha,
        beta: b.beta,
        eta: b.eta,
        action_prior: DiscreteDistribution::uniform(setting.num_actions),
        model_ensemble: build_model_grid(config)?,
        belief_prior_mode: BeliefPriorMode::UniformOverObservations,
        initial_belief: Belief::new(vec![
            config.initial_disease_probability,
            1.0 - config.initial_disease_probability,
        ])?,
        descriptive_mask: BTreeSet::new(),
    };
    Ok(DiagProblem {
        setting,
        truth,
        params,
        config: config.clone(),
    })
}
