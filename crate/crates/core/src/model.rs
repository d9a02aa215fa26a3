//! Domain types shared by the solver, the simulator, and the inverse sampler.
//!
//! Table layout is row-major nested arrays throughout:
//!
//! | table      | index order     | meaning            |
//! |------------|-----------------|--------------------|
//! | transition | `[s][u][s']`    | `τ(s' \| s, u)`    |
//! | emission   | `[u][s'][x']`   | `ω(x' \| u, s')`   |
//! | utility    | `[s][u]`        | `υ(s, u)`          |

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{BrcError, Result};

/// Absolute tolerance used for every probability normalization check.
pub const PROB_TOL: f64 = 1e-9;

fn check_simplex(weights: &[f64], what: &str) -> Result<()> {
    if weights.is_empty() {
        return Err(BrcError::InvalidArgument(format!("{what} is empty")));
    }
    let mut total = 0.0;
    for &w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(BrcError::InvalidArgument(format!(
                "{what} has a negative or non-finite entry {w}"
            )));
        }
        total += w;
    }
    if (total - 1.0).abs() > PROB_TOL {
        return Err(BrcError::InvalidArgument(format!(
            "{what} sums to {total}, not 1"
        )));
    }
    Ok(())
}

/// Finite state, observation and action spaces. The belief space is the simplex over states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSetting {
    pub num_states: usize,
    pub num_observations: usize,
    pub num_actions: usize,
    /// Actions that end an episode.
    #[serde(default)]
    pub terminal_actions: BTreeSet<usize>,
    #[serde(default)]
    pub state_labels: Vec<String>,
    #[serde(default)]
    pub observation_labels: Vec<String>,
    #[serde(default)]
    pub action_labels: Vec<String>,
}

impl ProblemSetting {
    pub fn is_terminal(&self, action: usize) -> bool {
        self.terminal_actions.contains(&action)
    }

    pub fn action_label(&self, action: usize) -> String {
        self.action_labels
            .get(action)
            .cloned()
            .unwrap_or_else(|| format!("u{action}"))
    }

    pub fn state_label(&self, state: usize) -> String {
        self.state_labels
            .get(state)
            .cloned()
            .unwrap_or_else(|| format!("s{state}"))
    }
}

/// A probability distribution over world states: the agent's internal state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Belief(Vec<f64>);

impl Belief {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        check_simplex(&probabilities, "belief")?;
        Ok(Self(probabilities))
    }

    /// Normalizes non-negative masses into a belief.
    pub fn from_unnormalized(mut masses: Vec<f64>) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(BrcError::InvalidArgument(format!(
                "cannot normalize masses with total {total}"
            )));
        }
        masses.iter_mut().for_each(|m| *m /= total);
        Self::new(masses)
    }

    pub fn uniform(num_states: usize) -> Self {
        Self(vec![1.0 / num_states as f64; num_states])
    }

    pub fn point(num_states: usize, state: usize) -> Self {
        let mut p = vec![0.0; num_states];
        p[state] = 1.0;
        Self(p)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn distance(&self, other: &Belief) -> f64 {
        crate::math::sqrt(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| (a - b) * (a - b))
                .sum(),
        )
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Non-negative weights over an indexed finite set, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DiscreteDistribution(Vec<f64>);

impl DiscreteDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        check_simplex(&weights, "distribution")?;
        Ok(Self(weights))
    }

    pub fn from_unnormalized(mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(BrcError::InvalidArgument(format!(
                "cannot normalize weights with total {total}"
            )));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(weights)
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0 / len as f64; len])
    }

    pub fn point(len: usize, index: usize) -> Self {
        let mut w = vec![0.0; len];
        w[index] = 1.0;
        Self(w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_variation(&self, other: &DiscreteDistribution) -> f64 {
        0.5 * self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &w) in self.0.iter().enumerate() {
            if w > self.0[best] {
                best = i;
            }
        }
        best
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// One candidate pair of transition and emission tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsModel {
    /// `transition[s][u][s']`
    pub transition: Vec<Vec<Vec<f64>>>,
    /// `emission[u][s'][x']`
    pub emission: Vec<Vec<Vec<f64>>>,
}

impl DynamicsModel {
    pub fn new(transition: Vec<Vec<Vec<f64>>>, emission: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let model = Self {
            transition,
            emission,
        };
        let mut findings = Vec::new();
        model.check_tables(&mut findings, None);
        match findings.into_iter().next() {
            Some(f) => Err(BrcError::InvalidArgument(f.detail)),
            None => Ok(model),
        }
    }

    pub fn num_states(&self) -> usize {
        self.transition.len()
    }

    pub fn num_actions(&self) -> usize {
        self.emission.len()
    }

    pub fn num_observations(&self) -> usize {
        self.emission
            .first()
            .and_then(|rows| rows.first())
            .map_or(0, Vec::len)
    }

    #[inline]
    pub fn transition_prob(&self, state: usize, action: usize, next: usize) -> f64 {
        self.transition[state][action][next]
    }

    #[inline]
    pub fn emission_prob(&self, action: usize, next: usize, observation: usize) -> f64 {
        self.emission[action][next][observation]
    }

    fn check_tables(&self, findings: &mut Vec<Finding>, setting: Option<&ProblemSetting>) {
        let (ns, nu, nx) = match setting {
            Some(s) => (s.num_states, s.num_actions, s.num_observations),
            None => (self.num_states(), self.num_actions(), self.num_observations()),
        };
        if self.transition.len() != ns
            || self.transition.iter().any(|r| {
                r.len() != nu || r.iter().any(|row| row.len() != ns)
            })
        {
            findings.push(Finding::new(
                FindingKind::DimensionMismatch,
                format!("transition table is not {ns}x{nu}x{ns}"),
            ));
            return;
        }
        if self.emission.len() != nu
            || self.emission.iter().any(|r| {
                r.len() != ns || r.iter().any(|row| row.len() != nx)
            })
        {
            findings.push(Finding::new(
                FindingKind::DimensionMismatch,
                format!("emission table is not {nu}x{ns}x{nx}"),
            ));
            return;
        }
        for (s, per_action) in self.transition.iter().enumerate() {
            for (u, row) in per_action.iter().enumerate() {
                if let Err(e) = check_simplex(row, "transition row") {
                    findings.push(Finding::new(
                        FindingKind::InvalidDistribution,
                        format!("transition[{s}][{u}]: {e}"),
                    ));
                }
            }
        }
        for (u, per_state) in self.emission.iter().enumerate() {
            for (s, row) in per_state.iter().enumerate() {
                if let Err(e) = check_simplex(row, "emission row") {
                    findings.push(Finding::new(
                        FindingKind::InvalidDistribution,
                        format!("emission[{u}][{s}]: {e}"),
                    ));
                }
            }
        }
    }
}

/// The agent's uncertain knowledge: candidate models with prior weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEnsemble {
    pub models: Vec<DynamicsModel>,
    pub prior: DiscreteDistribution,
}

impl ModelEnsemble {
    pub fn new(models: Vec<DynamicsModel>, prior: DiscreteDistribution) -> Result<Self> {
        if models.is_empty() {
            return Err(BrcError::InvalidArgument("ensemble has no models".into()));
        }
        if prior.len() != models.len() {
            return Err(BrcError::InvalidArgument(format!(
                "prior has {} weights for {} models",
                prior.len(),
                models.len()
            )));
        }
        Ok(Self { models, prior })
    }

    /// Ensemble that is certain about one model.
    pub fn single(model: DynamicsModel) -> Self {
        Self {
            models: vec![model],
            prior: DiscreteDistribution::point(1, 0),
        }
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}

/// Reference measure over next beliefs used by the recognition-complexity penalty.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeliefPriorMode {
    /// Each next-belief atom gets reference mass `1 / num_observations`.
    #[default]
    UniformOverObservations,
}

/// Parameter fields that may be marked descriptive (inferred) rather than normative (clamped).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamField {
    Alpha,
    Beta,
    Eta,
    Utility,
}

/// Planning parameters of a boundedly rational agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrcParams {
    /// `utility[s][u]`
    pub utility: Vec<Vec<f64>>,
    pub discount: f64,
    /// Decision-complexity multiplier; `1/alpha` is flexibility.
    pub alpha: f64,
    /// Specification-complexity multiplier; `1/beta` is optimism (negative for pessimism).
    pub beta: f64,
    /// Recognition-complexity multiplier; `1/eta` is adaptivity.
    pub eta: f64,
    pub action_prior: DiscreteDistribution,
    pub model_ensemble: ModelEnsemble,
    #[serde(default)]
    pub belief_prior_mode: BeliefPriorMode,
    /// Every episode starts at this belief.
    pub initial_belief: Belief,
    #[serde(default)]
    pub descriptive_mask: BTreeSet<ParamField>,
}

impl BrcParams {
    /// `E_{s~z} υ(s, u)`
    pub fn expected_utility(&self, belief: &[f64], action: usize) -> f64 {
        belief
            .iter()
            .zip(&self.utility)
            .map(|(p, row)| p * row[action])
            .sum()
    }

    pub fn is_descriptive(&self, field: ParamField) -> bool {
        self.descriptive_mask.contains(&field)
    }
}

/// One demonstrated episode.
///
/// `observations[t]` is the observation emitted after `actions[t]`. The observation that
/// follows a terminal final action is recorded but carries no information for inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub observations: Vec<usize>,
    pub actions: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hidden_states: Option<Vec<usize>>,
    #[serde(default)]
    pub truncated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_utility: Option<f64>,
}

impl Trajectory {
    pub fn new(actions: Vec<usize>, observations: Vec<usize>) -> Result<Self> {
        if actions.len() != observations.len() {
            return Err(BrcError::InvalidArgument(format!(
                "{} actions but {} observations",
                actions.len(),
                observations.len()
            )));
        }
        Ok(Self {
            observations,
            actions,
            hidden_states: None,
            truncated: false,
            final_utility: None,
        })
    }

    /// Attaches simulator ground truth. Only diagnostics read it back.
    pub fn with_hidden_states(mut self, states: Vec<usize>) -> Result<Self> {
        if states.len() != self.actions.len() {
            return Err(BrcError::InvalidArgument(
                "hidden state sequence length differs from actions".into(),
            ));
        }
        self.hidden_states = Some(states);
        Ok(self)
    }

    /// Simulator ground truth, for diagnostics only.
    pub fn hidden_states(&self) -> Option<&[usize]> {
        self.hidden_states.as_deref()
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// `(action, observation)` pairs in order; the observable part of the episode.
    pub fn steps(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.actions
            .iter()
            .copied()
            .zip(self.observations.iter().copied())
    }

    pub fn check(&self, setting: &ProblemSetting) -> Result<()> {
        if self.actions.len() != self.observations.len() {
            return Err(BrcError::InvalidArgument(
                "action and observation sequences differ in length".into(),
            ));
        }
        for (t, (u, x)) in self.steps().enumerate() {
            if u >= setting.num_actions || x >= setting.num_observations {
                return Err(BrcError::InvalidArgument(format!(
                    "step {t} has out-of-range action {u} or observation {x}"
                )));
            }
            if setting.is_terminal(u) && t + 1 != self.actions.len() {
                return Err(BrcError::InvalidArgument(format!(
                    "terminal action {u} at step {t} is not last"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    EmptySpace,
    DimensionMismatch,
    DiscountRange,
    InvalidMultiplier,
    NonFiniteUtility,
    InvalidDistribution,
    TerminalActionRange,
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub detail: String,
}

impl Finding {
    fn new(kind: FindingKind, detail: String) -> Self {
        Self { kind, detail }
    }
}

/// Lists every violated invariant of a setting and parameter set; empty when well-formed.
pub fn validate(setting: &ProblemSetting, params: &BrcParams) -> Vec<Finding> {
    use FindingKind::*;
    let mut out = Vec::new();
    if setting.num_states == 0 || setting.num_observations == 0 || setting.num_actions == 0 {
        out.push(Finding::new(EmptySpace, "every space needs at least one element".into()));
        return out;
    }
    if let Some(&u) = setting
        .terminal_actions
        .iter()
        .find(|&&u| u >= setting.num_actions)
    {
        out.push(Finding::new(
            TerminalActionRange,
            format!("terminal action {u} is out of range"),
        ));
    }
    if !(0.0..1.0).contains(&params.discount) {
        out.push(Finding::new(
            DiscountRange,
            format!("discount {} is outside [0, 1)", params.discount),
        ));
    }
    for (name, value) in [("alpha", params.alpha), ("beta", params.beta), ("eta", params.eta)] {
        if !value.is_finite() || value == 0.0 {
            out.push(Finding::new(
                InvalidMultiplier,
                format!("{name} = {value} must be finite and non-zero"),
            ));
        }
    }
    if params.utility.len() != setting.num_states
        || params
            .utility
            .iter()
            .any(|row| row.len() != setting.num_actions)
    {
        out.push(Finding::new(
            DimensionMismatch,
            format!(
                "utility table is not {}x{}",
                setting.num_states, setting.num_actions
            ),
        ));
    } else if params.utility.iter().flatten().any(|v| !v.is_finite()) {
        out.push(Finding::new(NonFiniteUtility, "utility has a non-finite entry".into()));
    }
    if params.action_prior.len() != setting.num_actions {
        out.push(Finding::new(
            DimensionMismatch,
            format!(
                "action prior has {} entries for {} actions",
                params.action_prior.len(),
                setting.num_actions
            ),
        ));
    } else if let Err(e) = check_simplex(params.action_prior.weights(), "action prior") {
        out.push(Finding::new(InvalidDistribution, format!("{e}")));
    }
    if params.initial_belief.len() != setting.num_states {
        out.push(Finding::new(
            DimensionMismatch,
            format!(
                "initial belief has {} entries for {} states",
                params.initial_belief.len(),
                setting.num_states
            ),
        ));
    } else if let Err(e) = check_simplex(params.initial_belief.probabilities(), "initial belief") {
        out.push(Finding::new(InvalidDistribution, format!("{e}")));
    }
    let ensemble = &params.model_ensemble;
    if ensemble.models.is_empty() || ensemble.prior.len() != ensemble.models.len() {
        out.push(Finding::new(
            DimensionMismatch,
            format!(
                "ensemble has {} models and {} prior weights",
                ensemble.models.len(),
                ensemble.prior.len()
            ),
        ));
    } else if let Err(e) = check_simplex(ensemble.prior.weights(), "model prior") {
        out.push(Finding::new(InvalidDistribution, format!("{e}")));
    }
    for model in &ensemble.models {
        model.check_tables(&mut out, Some(setting));
    }
    out
}

/// Checks a model against a setting, e.g. the true environment.
pub fn validate_model(setting: &ProblemSetting, model: &DynamicsModel) -> Vec<Finding> {
    let mut out = Vec::new();
    model.check_tables(&mut out, Some(setting));
    out
}
