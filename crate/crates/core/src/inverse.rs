//! Inverse bounded rational control: soft-policy-matching likelihood of demonstrated
//! actions and random-walk Metropolis sampling of the descriptive parameters.
//!
//! The objective is maximized (equivalently, the posterior it induces under a flat
//! prior on a box is sampled).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{BrcError, Result};
use crate::math::{exp, ln, sqrt};
use crate::model::{BrcParams, DynamicsModel, ModelEnsemble, ParamField, ProblemSetting, Trajectory};
use crate::solver::{
    solve_with_kernel, AgentPolicy, BeliefKernel, RecognitionScratch, SolvedAgent,
    DEFAULT_MAX_ITERATIONS, DEFAULT_RESOLUTION, DEFAULT_TOLERANCE,
};

/// `Σ_t log π(u_t | z_t)` with `z_t` rebuilt by the agent's recognition policy.
/// Returns `-inf` as soon as a recorded action has probability zero.
pub fn trajectory_log_likelihood<A: AgentPolicy + ?Sized>(
    trajectory: &Trajectory,
    agent: &A,
) -> Result<f64> {
    trajectory.check(agent.setting())?;
    let mut belief = agent.initial_belief().clone();
    let mut total = 0.0;
    let steps = trajectory.len();
    for (t, (action, observation)) in trajectory.steps().enumerate() {
        let p = agent.decision_policy(&belief)?.weights()[action];
        if p == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        total += ln(p);
        if t + 1 < steps {
            belief = agent.recognition_step(&belief, action, observation)?;
        }
    }
    Ok(total)
}

/// Distinct observable histories with multiplicities. The observation after the last
/// action never enters the likelihood and is dropped from the key.
#[derive(Debug, Clone)]
struct HistoryGroups {
    groups: Vec<(Vec<usize>, Vec<usize>, f64)>,
}

impl HistoryGroups {
    fn new(dataset: &[Trajectory], setting: &ProblemSetting) -> Result<Self> {
        let mut counts: BTreeMap<(Vec<usize>, Vec<usize>), usize> = BTreeMap::new();
        for trajectory in dataset {
            trajectory.check(setting)?;
            let n = trajectory.len();
            let observed = trajectory.observations[..n.saturating_sub(1)].to_vec();
            *counts.entry((trajectory.actions.clone(), observed)).or_default() += 1;
        }
        Ok(Self {
            groups: counts
                .into_iter()
                .map(|((a, o), c)| (a, o, c as f64))
                .collect(),
        })
    }
}

fn history_log_likelihood(
    agent: &SolvedAgent,
    actions: &[usize],
    observations: &[usize],
    scratch: &mut RecognitionScratch,
    q: &mut [f64],
    pi: &mut [f64],
) -> Result<f64> {
    let mut belief = agent.params().initial_belief.probabilities().to_vec();
    let mut total = 0.0;
    for (t, &action) in actions.iter().enumerate() {
        let lp = agent.log_decision_prob(&belief, action, q, pi)?;
        if lp == f64::NEG_INFINITY {
            return Ok(lp);
        }
        total += lp;
        if let Some(&observation) = observations.get(t) {
            agent.recognition_into(&belief, action, observation, scratch)?;
            belief.copy_from_slice(&scratch.next);
        }
    }
    Ok(total)
}

/// Likelihood of one dataset as a function of the planning parameters. The belief
/// kernel is built once; each evaluation solves the fixed point, optionally warm-started.
#[derive(Debug, Clone)]
pub struct LikelihoodEvaluator {
    kernel: Arc<BeliefKernel>,
    histories: HistoryGroups,
    tolerance: f64,
    max_iterations: usize,
}

/// A likelihood value together with the agent it was computed under
/// (`None` for an empty dataset, which needs no solve).
#[derive(Debug, Clone)]
pub struct LikelihoodValue {
    pub log_likelihood: f64,
    pub agent: Option<SolvedAgent>,
    /// Whether a warm start failed and a cold start was needed.
    pub recovered_cold: bool,
}

impl LikelihoodEvaluator {
    pub fn new(
        kernel: Arc<BeliefKernel>,
        dataset: &[Trajectory],
        tolerance: f64,
        max_iterations: usize,
    ) -> Result<Self> {
        let histories = HistoryGroups::new(dataset, kernel.setting())?;
        Ok(Self {
            kernel,
            histories,
            tolerance,
            max_iterations,
        })
    }

    pub fn kernel(&self) -> &Arc<BeliefKernel> {
        &self.kernel
    }

    pub fn is_empty(&self) -> bool {
        self.histories.groups.is_empty()
    }

    pub fn evaluate(&self, params: &BrcParams, warm_start: Option<&[f64]>) -> Result<LikelihoodValue> {
        if self.is_empty() {
            return Ok(LikelihoodValue {
                log_likelihood: 0.0,
                agent: None,
                recovered_cold: false,
            });
        }
        let solve = |warm| {
            solve_with_kernel(
                self.kernel.clone(),
                params,
                self.tolerance,
                self.max_iterations,
                warm,
            )
        };
        let (agent, recovered_cold) = match solve(warm_start) {
            Ok(agent) => (agent, false),
            Err(BrcError::NotConverged { .. }) if warm_start.is_some() => (solve(None)?, true),
            Err(e) => return Err(e),
        };
        let log_likelihood = self.log_likelihood_under(&agent)?;
        Ok(LikelihoodValue {
            log_likelihood,
            agent: Some(agent),
            recovered_cold,
        })
    }

    /// Dataset log-likelihood under an already solved agent.
    pub fn log_likelihood_under(&self, agent: &SolvedAgent) -> Result<f64> {
        let setting = self.kernel.setting();
        let mut scratch = RecognitionScratch::new(setting.num_states, self.kernel.num_models());
        let mut q = vec![0.0; setting.num_actions];
        let mut pi = vec![0.0; setting.num_actions];
        let mut total = 0.0;
        for (actions, observations, count) in &self.histories.groups {
            let ll = history_log_likelihood(agent, actions, observations, &mut scratch, &mut q, &mut pi)?;
            total += count * ll;
        }
        Ok(total)
    }
}

/// Solves once under `params` and sums the per-trajectory log-likelihoods.
pub fn dataset_log_likelihood(
    dataset: &[Trajectory],
    setting: &ProblemSetting,
    params: &BrcParams,
    resolution: usize,
    tolerance: f64,
    max_iterations: usize,
) -> Result<f64> {
    let kernel = Arc::new(BeliefKernel::for_params(setting, params, resolution)?);
    let evaluator = LikelihoodEvaluator::new(kernel, dataset, tolerance, max_iterations)?;
    Ok(evaluator.evaluate(params, None)?.log_likelihood)
}

/// Descriptive parameters the sampler can move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    LogAlpha,
    LogBeta,
    LogEta,
    /// Shared value of the utility cells listed in the inference config.
    IncorrectReward,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::LogAlpha => "log_alpha",
            Target::LogBeta => "log_beta",
            Target::LogEta => "log_eta",
            Target::IncorrectReward => "incorrect_reward",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.trim() {
            "log_alpha" => Some(Target::LogAlpha),
            "log_beta" => Some(Target::LogBeta),
            "log_eta" => Some(Target::LogEta),
            "incorrect_reward" => Some(Target::IncorrectReward),
            _ => None,
        }
    }

    pub fn field(self) -> ParamField {
        match self {
            Target::LogAlpha => ParamField::Alpha,
            Target::LogBeta => ParamField::Beta,
            Target::LogEta => ParamField::Eta,
            Target::IncorrectReward => ParamField::Utility,
        }
    }

    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            Target::IncorrectReward => (-100.0, 100.0),
            _ => (-12.0, 7.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceConfig {
    pub targets: Vec<Target>,
    pub proposal_std: f64,
    /// Per-target proposal standard deviations replacing `proposal_std`.
    pub proposal_std_overrides: BTreeMap<Target, f64>,
    pub steps_after_burnin: usize,
    pub burnin: usize,
    pub thinning: usize,
    /// Box of the flat prior; targets without an entry use [`Target::default_bounds`].
    pub bounds: BTreeMap<Target, (f64, f64)>,
    /// Starting point; targets without an entry start from the base parameters.
    pub initial: BTreeMap<Target, f64>,
    pub seed: u64,
    /// Sign applied to `exp(log_beta)`.
    pub beta_sign: f64,
    /// Utility cells `(state, action)` moved by [`Target::IncorrectReward`].
    pub utility_cells: Vec<(usize, usize)>,
    pub resolution: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Bins per axis of the joint `(log β, log η)` histogram.
    pub histogram_bins: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            targets: vec![Target::LogAlpha],
            proposal_std: 0.1,
            proposal_std_overrides: BTreeMap::new(),
            steps_after_burnin: 10_000,
            burnin: 1_000,
            thinning: 10,
            bounds: BTreeMap::new(),
            initial: BTreeMap::new(),
            seed: 0,
            beta_sign: 1.0,
            utility_cells: Vec::new(),
            resolution: DEFAULT_RESOLUTION,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            histogram_bins: 38,
        }
    }
}

impl InferenceConfig {
    pub fn bounds_of(&self, target: Target) -> (f64, f64) {
        self.bounds
            .get(&target)
            .copied()
            .unwrap_or_else(|| target.default_bounds())
    }

    pub fn proposal_std_of(&self, target: Target) -> f64 {
        self.proposal_std_overrides
            .get(&target)
            .copied()
            .unwrap_or(self.proposal_std)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: alloc::string::String| Err(BrcError::InvalidArgument(m));
        if self.targets.is_empty() {
            return bad("at least one descriptive target is required".into());
        }
        for (i, t) in self.targets.iter().enumerate() {
            if self.targets[..i].contains(t) {
                return bad(format!("target {} listed twice", t.name()));
            }
            let (lo, hi) = self.bounds_of(*t);
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return bad(format!("bounds for {} must satisfy lower < upper", t.name()));
            }
            let std = self.proposal_std_of(*t);
            if !(std > 0.0) || !std.is_finite() {
                return bad(format!("proposal std for {} must be positive", t.name()));
            }
        }
        if self.thinning == 0 {
            return bad("thinning must be at least 1".into());
        }
        if self.beta_sign != 1.0 && self.beta_sign != -1.0 {
            return bad("beta_sign must be 1 or -1".into());
        }
        if self.targets.contains(&Target::IncorrectReward) && self.utility_cells.is_empty() {
            return bad("incorrect_reward needs at least one utility cell".into());
        }
        Ok(())
    }

    /// Number of retained samples: `steps_after_burnin / thinning`.
    pub fn retained(&self) -> usize {
        self.steps_after_burnin / self.thinning
    }
}

/// One retained state of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSample {
    pub step: usize,
    /// In target order; log space for the log targets.
    pub parameters: Vec<f64>,
    pub log_likelihood: f64,
    /// Whether the proposal made at this step was accepted.
    pub accepted: bool,
}

/// Random-walk settings for [`run_chain`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSettings {
    pub proposal_std: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
    pub burnin: usize,
    pub steps_after_burnin: usize,
    pub thinning: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    pub proposals: usize,
    pub accepted: usize,
    pub out_of_bounds: usize,
    /// Proposals rejected because the target could not be evaluated.
    pub failed_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub samples: Vec<PosteriorSample>,
    pub stats: ChainStats,
}

/// Random-walk Metropolis under a flat prior on a box.
///
/// `log_target(θ, state_of_current)` returns the log-likelihood at `θ` and an
/// auxiliary state (e.g. a warm-start value function) that is kept while `θ` is the
/// current point; `Ok(None)` marks a failed evaluation, which rejects the proposal.
/// Every step draws one Gaussian per coordinate and one uniform, so chains are
/// reproducible from the seed.
pub fn run_chain<S, F>(
    settings: &ChainSettings,
    initial: Vec<f64>,
    initial_state: S,
    mut log_target: F,
) -> Result<Chain>
where
    F: FnMut(&[f64], &S) -> Result<Option<(f64, S)>>,
{
    let dim = initial.len();
    if settings.proposal_std.len() != dim || settings.bounds.len() != dim {
        return Err(BrcError::InvalidArgument("chain settings do not match dimension".into()));
    }
    if settings.thinning == 0 {
        return Err(BrcError::InvalidArgument("thinning must be at least 1".into()));
    }
    let inside = |theta: &[f64]| {
        theta
            .iter()
            .zip(&settings.bounds)
            .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    };
    if !inside(&initial) {
        return Err(BrcError::InvalidArgument("initial point lies outside the bounds".into()));
    }
    let (mut current_ll, mut current_state) = log_target(&initial, &initial_state)?.ok_or_else(|| {
        BrcError::InvalidArgument("log target cannot be evaluated at the initial point".into())
    })?;
    let mut current = initial;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut stats = ChainStats::default();
    let mut samples = Vec::with_capacity(settings.steps_after_burnin / settings.thinning);
    let total = settings.burnin + settings.steps_after_burnin;
    let mut proposal = vec![0.0; dim];
    for step in 1..=total {
        for ((p, c), s) in proposal.iter_mut().zip(&current).zip(&settings.proposal_std) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *p = c + s * z;
        }
        let uniform: f64 = rng.random();
        stats.proposals += 1;
        let mut accepted = false;
        if !inside(&proposal) {
            stats.out_of_bounds += 1;
        } else {
            match log_target(&proposal, &current_state)? {
                None => stats.failed_evaluations += 1,
                Some((ll, state)) => {
                    let accept = if ll == f64::NEG_INFINITY {
                        current_ll == f64::NEG_INFINITY
                    } else if ll >= current_ll {
                        true
                    } else {
                        uniform < exp(ll - current_ll)
                    };
                    if accept {
                        accepted = true;
                        stats.accepted += 1;
                        current.copy_from_slice(&proposal);
                        current_ll = ll;
                        current_state = state;
                    }
                }
            }
        }
        if step > settings.burnin && (step - settings.burnin) % settings.thinning == 0 {
            samples.push(PosteriorSample {
                step,
                parameters: current.clone(),
                log_likelihood: current_ll,
                accepted,
            });
        }
    }
    Ok(Chain { samples, stats })
}

/// Posterior samples and tallies from [`mh_infer`].
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceRun {
    pub targets: Vec<Target>,
    pub samples: Vec<PosteriorSample>,
    pub stats: ChainStats,
    /// Warm-started solves that failed and succeeded from a cold start.
    pub cold_restarts: usize,
}

/// Writes the descriptive values `theta` (in target order) into a copy of `base`.
pub fn apply_targets(
    base: &BrcParams,
    targets: &[Target],
    theta: &[f64],
    config: &InferenceConfig,
) -> BrcParams {
    let mut params = base.clone();
    for (&target, &value) in targets.iter().zip(theta) {
        match target {
            Target::LogAlpha => params.alpha = exp(value),
            Target::LogBeta => params.beta = config.beta_sign * exp(value),
            Target::LogEta => params.eta = exp(value),
            Target::IncorrectReward => {
                for &(s, u) in &config.utility_cells {
                    params.utility[s][u] = value;
                }
            }
        }
    }
    params
}

fn initial_value(base: &BrcParams, target: Target, config: &InferenceConfig) -> Result<f64> {
    if let Some(&v) = config.initial.get(&target) {
        return Ok(v);
    }
    let positive_log = |v: f64, name: &str| {
        if v > 0.0 {
            Ok(ln(v))
        } else {
            Err(BrcError::InvalidArgument(format!(
                "base {name} = {v} has no logarithm; set an initial value"
            )))
        }
    };
    let raw = match target {
        Target::LogAlpha => positive_log(base.alpha, "alpha")?,
        Target::LogBeta => positive_log(base.beta * config.beta_sign, "beta")?,
        Target::LogEta => positive_log(base.eta, "eta")?,
        Target::IncorrectReward => {
            let &(s, u) = config
                .utility_cells
                .first()
                .ok_or_else(|| BrcError::InvalidArgument("no utility cells".into()))?;
            base.utility[s][u]
        }
    };
    let (lo, hi) = config.bounds_of(target);
    Ok(raw.clamp(lo, hi))
}

/// Metropolis sampling of the descriptive targets given a dataset, with every
/// non-target parameter clamped to `base_params`.
pub fn mh_infer(
    dataset: &[Trajectory],
    setting: &ProblemSetting,
    base_params: &BrcParams,
    config: &InferenceConfig,
) -> Result<InferenceRun> {
    config.check()?;
    for target in &config.targets {
        if !base_params.is_descriptive(target.field()) {
            return Err(BrcError::InvalidArgument(format!(
                "{} is not marked descriptive in the base parameters",
                target.name()
            )));
        }
    }
    for &(s, u) in &config.utility_cells {
        if s >= setting.num_states || u >= setting.num_actions {
            return Err(BrcError::InvalidArgument(format!("utility cell ({s}, {u}) out of range")));
        }
    }
    let kernel = Arc::new(BeliefKernel::for_params(setting, base_params, config.resolution)?);
    let evaluator = LikelihoodEvaluator::new(kernel, dataset, config.tolerance, config.max_iterations)?;
    let targets = config.targets.clone();
    let initial = targets
        .iter()
        .map(|&t| initial_value(base_params, t, config))
        .collect::<Result<Vec<_>>>()?;
    let settings = ChainSettings {
        proposal_std: targets.iter().map(|&t| config.proposal_std_of(t)).collect(),
        bounds: targets.iter().map(|&t| config.bounds_of(t)).collect(),
        burnin: config.burnin,
        steps_after_burnin: config.steps_after_burnin,
        thinning: config.thinning,
        seed: config.seed,
    };
    let mut cold_restarts = 0;
    let mut at_initial = true;
    let chain = run_chain(
        &settings,
        initial,
        None::<Vec<f64>>,
        |theta, warm: &Option<Vec<f64>>| {
            let params = apply_targets(base_params, &targets, theta, config);
            let result = match evaluator.evaluate(&params, warm.as_deref()) {
                Ok(value) => {
                    cold_restarts += usize::from(value.recovered_cold);
                    let v = value.agent.map(|a| a.v_star().to_vec());
                    Ok(Some((value.log_likelihood, v)))
                }
                // Failure at the starting point aborts; later failures reject.
                Err(e @ BrcError::NotConverged { .. }) if at_initial => Err(e),
                Err(BrcError::NotConverged { .. }) => Ok(None),
                Err(e) => Err(e),
            };
            at_initial = false;
            result
        },
    )?;
    Ok(InferenceRun {
        targets,
        samples: chain.samples,
        stats: chain.stats,
        cold_restarts,
    })
}

/// Marginal summary of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: alloc::string::String,
    pub mean: f64,
    pub std: f64,
    /// Central 90% interval.
    pub lower_90: f64,
    pub upper_90: f64,
}

/// Counts on a regular grid; `counts[i][j]` covers `x_edges[i]..x_edges[i+1]` by
/// `y_edges[j]..y_edges[j+1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram2d {
    pub x_name: alloc::string::String,
    pub y_name: alloc::string::String,
    pub x_edges: Vec<f64>,
    pub y_edges: Vec<f64>,
    pub counts: Vec<Vec<usize>>,
}

impl Histogram2d {
    pub fn new(
        x_name: &str,
        y_name: &str,
        x_bounds: (f64, f64),
        y_bounds: (f64, f64),
        bins: usize,
        points: impl IntoIterator<Item = (f64, f64)>,
    ) -> Self {
        let edges = |(lo, hi): (f64, f64)| -> Vec<f64> {
            (0..=bins)
                .map(|i| lo + (hi - lo) * i as f64 / bins as f64)
                .collect()
        };
        let bin_of = |v: f64, (lo, hi): (f64, f64)| -> usize {
            let b = ((v - lo) / (hi - lo) * bins as f64) as isize;
            b.clamp(0, bins as isize - 1) as usize
        };
        let mut counts = vec![vec![0usize; bins]; bins];
        for (x, y) in points {
            counts[bin_of(x, x_bounds)][bin_of(y, y_bounds)] += 1;
        }
        Self {
            x_name: x_name.into(),
            y_name: y_name.into(),
            x_edges: edges(x_bounds),
            y_edges: edges(y_bounds),
            counts,
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Smallest set of bins, taken in order of decreasing count, holding at least
    /// `mass` of the samples.
    pub fn credible_region(&self, mass: f64) -> alloc::collections::BTreeSet<(usize, usize)> {
        let mut cells: Vec<((usize, usize), usize)> = self
            .counts
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &c)| ((i, j), c)))
            .filter(|&(_, c)| c > 0)
            .collect();
        cells.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let need = mass * self.total() as f64;
        let mut acc = 0usize;
        let mut region = alloc::collections::BTreeSet::new();
        for (cell, c) in cells {
            if acc as f64 >= need {
                break;
            }
            acc += c;
            region.insert(cell);
        }
        region
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub num_samples: usize,
    pub parameters: Vec<ParamSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_beta_eta: Option<Histogram2d>,
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(name: &str, values: &[f64]) -> Result<ParamSummary> {
    if values.len() < 2 {
        return Err(BrcError::TooFewSamples {
            needed: 2,
            got: values.len(),
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(ParamSummary {
        name: name.into(),
        mean,
        std: sqrt(var),
        lower_90: quantile(&sorted, 0.05),
        upper_90: quantile(&sorted, 0.95),
    })
}

/// Per-parameter mean, standard deviation and central 90% interval, plus the joint
/// `(log β, log η)` histogram when both are targets.
pub fn posterior_summary(
    samples: &[PosteriorSample],
    config: &InferenceConfig,
) -> Result<PosteriorSummary> {
    if samples.len() < 2 {
        return Err(BrcError::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let column = |i: usize| samples.iter().map(|s| s.parameters[i]).collect::<Vec<_>>();
    let parameters = config
        .targets
        .iter()
        .enumerate()
        .map(|(i, t)| summarize(t.name(), &column(i)))
        .collect::<Result<Vec<_>>>()?;
    let position = |t: Target| config.targets.iter().position(|&x| x == t);
    let joint_beta_eta = match (position(Target::LogBeta), position(Target::LogEta)) {
        (Some(b), Some(e)) => Some(Histogram2d::new(
            Target::LogBeta.name(),
            Target::LogEta.name(),
            config.bounds_of(Target::LogBeta),
            config.bounds_of(Target::LogEta),
            config.histogram_bins,
            samples.iter().map(|s| (s.parameters[b], s.parameters[e])),
        )),
        _ => None,
    };
    Ok(PosteriorSummary {
        num_samples: samples.len(),
        parameters,
        joint_beta_eta,
    })
}

/// Clamps used by the reward-learning baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrlBaselineConfig {
    /// Decision temperature of the near-deterministic demonstrator model.
    pub alpha: f64,
    /// Recognition multiplier, close to zero.
    pub eta: f64,
    /// Clamped reward of a correct terminal decision; the ratio denominator.
    pub correct_reward: f64,
}

impl Default for IrlBaselineConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            eta: 1e-8,
            correct_reward: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrlPosterior {
    pub run: InferenceRun,
    /// `incorrect_reward / correct_reward` per retained sample.
    pub ratios: Vec<f64>,
    pub ratio_summary: ParamSummary,
}

/// Bayesian reward learning on the same data: the agent is certain about the true
/// model, nearly unbounded, and only the incorrect-decision reward is inferred.
pub fn irl_baseline(
    dataset: &[Trajectory],
    setting: &ProblemSetting,
    base_params: &BrcParams,
    truth: &DynamicsModel,
    inference: &InferenceConfig,
    baseline: &IrlBaselineConfig,
) -> Result<IrlPosterior> {
    if !(baseline.correct_reward != 0.0) {
        return Err(BrcError::InvalidArgument("correct reward must be non-zero".into()));
    }
    let mut params = base_params.clone();
    params.alpha = baseline.alpha;
    params.eta = baseline.eta;
    params.model_ensemble = ModelEnsemble::single(truth.clone());
    params.descriptive_mask = [ParamField::Utility].into_iter().collect();
    let mut config = inference.clone();
    config.targets = vec![Target::IncorrectReward];
    let run = mh_infer(dataset, setting, &params, &config)?;
    let ratios: Vec<f64> = run
        .samples
        .iter()
        .map(|s| s.parameters[0] / baseline.correct_reward)
        .collect();
    let ratio_summary = summarize("cost_benefit_ratio", &ratios)?;
    Ok(IrlPosterior {
        run,
        ratios,
        ratio_summary,
    })
}
