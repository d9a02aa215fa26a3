//! Boundedly rational value iteration on the belief lattice.
//!
//! The backup nests three soft expectations. For a node `z`, action `u` and model `m`:
//!
//! ```text
//! K(z,u,m) = Σ_{x'} P_m(x'|z,u) · ( -η log(P_m(x'|z,u) / ϱ̃) + γ V(z'_m(x')) )
//! Q(z,u)   = E_{s~z} υ(s,u) + β log Σ_m σ̃(m) exp(K(z,u,m) / β)
//! V(z)     = α log Σ_u π̃(u) exp(Q(z,u) / α)
//! ```
//!
//! Terminal actions collect their immediate utility and nothing else. The decision
//! and specification policies are the matching softmax distributions.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{BrcError, Result};
use crate::lattice::{BeliefLattice, Stencil};
use crate::math::{exp, ln};
use crate::model::{
    validate, validate_model, BeliefPriorMode, Belief, BrcParams, DiscreteDistribution,
    ModelEnsemble, ProblemSetting,
};
use crate::recognition::{biased_recognition_update, mix_posteriors, next_belief_atoms};

/// At or above this magnitude a temperature is treated as infinite (plain expectation).
pub const LINEAR_TEMPERATURE: f64 = 1e5;
/// Below this magnitude a temperature is treated as zero (hard max, or min when negative).
pub const HARD_TEMPERATURE: f64 = 1e-8;

pub const DEFAULT_RESOLUTION: usize = 100;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 2000;

/// `t · log Σ_i p_i exp(v_i / t)` over the support of `p`.
pub fn soft_expectation(temperature: f64, prior: &DiscreteDistribution, values: &[f64]) -> f64 {
    assert_eq!(prior.len(), values.len(), "prior and values differ in length");
    soft_expectation_slice(temperature, prior.weights(), values)
}

pub(crate) fn soft_expectation_slice(t: f64, weights: &[f64], values: &[f64]) -> f64 {
    let support = weights.iter().zip(values).filter(|(w, _)| **w > 0.0);
    if t.abs() >= LINEAR_TEMPERATURE {
        return support.map(|(w, v)| w * v).sum();
    }
    if t.abs() < HARD_TEMPERATURE {
        let pick = if t > 0.0 { f64::max } else { f64::min };
        let init = if t > 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
        return support.fold(init, |acc, (_, &v)| pick(acc, v));
    }
    let shift = weights
        .iter()
        .zip(values)
        .filter(|(w, _)| **w > 0.0)
        .fold(f64::NEG_INFINITY, |acc, (_, &v)| acc.max(v / t));
    let sum: f64 = support.map(|(w, &v)| w * exp(v / t - shift)).sum();
    t * (shift + ln(sum))
}

/// `p_i exp(v_i / t) / Z`, with the same limits as [`soft_expectation`].
pub fn soft_policy(
    temperature: f64,
    prior: &DiscreteDistribution,
    values: &[f64],
) -> DiscreteDistribution {
    let mut out = vec![0.0; prior.len()];
    soft_policy_into(temperature, prior.weights(), values, &mut out);
    DiscreteDistribution::from_unnormalized(out).expect("softmax over a non-empty support")
}

pub(crate) fn soft_policy_into(t: f64, weights: &[f64], values: &[f64], out: &mut [f64]) {
    if t.abs() >= LINEAR_TEMPERATURE {
        out.copy_from_slice(weights);
        return;
    }
    if t.abs() < HARD_TEMPERATURE {
        let best = soft_expectation_slice(t, weights, values);
        let mut total = 0.0;
        for ((o, &w), &v) in out.iter_mut().zip(weights).zip(values) {
            *o = if w > 0.0 && v == best { w } else { 0.0 };
            total += *o;
        }
        out.iter_mut().for_each(|o| *o /= total);
        return;
    }
    let shift = weights
        .iter()
        .zip(values)
        .filter(|(w, _)| **w > 0.0)
        .fold(f64::NEG_INFINITY, |acc, (_, &v)| acc.max(v / t));
    let mut total = 0.0;
    for ((o, &w), &v) in out.iter_mut().zip(weights).zip(values) {
        *o = if w > 0.0 { w * exp(v / t - shift) } else { 0.0 };
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

/// Everything about the belief dynamics on the lattice that does not depend on
/// `(υ, γ, α, β, η, π̃)`: per node, action and model, the expected log-ratio term of
/// the recognition penalty and the sparse map from node values to expected
/// continuation values. Built once and shared across solves.
#[derive(Debug, Clone)]
pub struct BeliefKernel {
    setting: ProblemSetting,
    lattice: BeliefLattice,
    ensemble: ModelEnsemble,
    belief_prior_mode: BeliefPriorMode,
    num_actions: usize,
    num_models: usize,
    /// `Σ_{x'} P(x') · (-log(P(x') / ϱ̃))` per block `(node, action, model)`.
    surprise: Vec<f64>,
    row_start: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl BeliefKernel {
    pub fn new(
        setting: &ProblemSetting,
        ensemble: &ModelEnsemble,
        belief_prior_mode: BeliefPriorMode,
        resolution: usize,
    ) -> Result<Self> {
        for model in &ensemble.models {
            if let Some(f) = validate_model(setting, model).into_iter().next() {
                return Err(BrcError::InvalidArgument(f.detail));
            }
        }
        let lattice = BeliefLattice::new(setting.num_states, resolution)?;
        let num_actions = setting.num_actions;
        let num_models = ensemble.len();
        let blocks = lattice.len() * num_actions * num_models;
        let log_reference = match belief_prior_mode {
            BeliefPriorMode::UniformOverObservations => -ln(setting.num_observations as f64),
        };
        let mut surprise = vec![0.0; blocks];
        let mut row_start = Vec::with_capacity(blocks + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for node in lattice.nodes() {
            for u in 0..num_actions {
                for model in &ensemble.models {
                    let block = row_start.len() - 1;
                    if !setting.is_terminal(u) {
                        let mut s = 0.0;
                        for atom in next_belief_atoms(node, u, model) {
                            let p = atom.probability;
                            s -= p * (ln(p) - log_reference);
                            for (idx, w) in lattice.stencil(atom.belief.probabilities())? {
                                cols.push(idx as u32);
                                vals.push(p * w);
                            }
                        }
                        surprise[block] = s;
                    }
                    row_start.push(cols.len());
                }
            }
        }
        Ok(Self {
            setting: setting.clone(),
            lattice,
            ensemble: ensemble.clone(),
            belief_prior_mode,
            num_actions,
            num_models,
            surprise,
            row_start,
            cols,
            vals,
        })
    }

    /// Kernel for the lattice and ensemble named in `params`.
    pub fn for_params(
        setting: &ProblemSetting,
        params: &BrcParams,
        resolution: usize,
    ) -> Result<Self> {
        Self::new(
            setting,
            &params.model_ensemble,
            params.belief_prior_mode,
            resolution,
        )
    }

    pub fn setting(&self) -> &ProblemSetting {
        &self.setting
    }

    pub fn lattice(&self) -> &BeliefLattice {
        &self.lattice
    }

    pub fn ensemble(&self) -> &ModelEnsemble {
        &self.ensemble
    }

    pub fn num_nodes(&self) -> usize {
        self.lattice.len()
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_models(&self) -> usize {
        self.num_models
    }

    #[inline]
    fn block(&self, node: usize, action: usize, model: usize) -> usize {
        (node * self.num_actions + action) * self.num_models + model
    }

    /// Expected `-log(ϱ/ϱ̃)` for one block; multiplied by `η` it is the surprise
    /// contribution to `K`. Zero for terminal actions.
    pub fn surprise(&self, node: usize, action: usize, model: usize) -> f64 {
        self.surprise[self.block(node, action, model)]
    }

    /// `Σ_{x'} P(x') · V(z'(x'))` with `V` interpolated on the lattice.
    #[inline]
    pub fn expected_next_value(&self, node: usize, action: usize, model: usize, v: &[f64]) -> f64 {
        let b = self.block(node, action, model);
        let (lo, hi) = (self.row_start[b], self.row_start[b + 1]);
        self.cols[lo..hi]
            .iter()
            .zip(&self.vals[lo..hi])
            .map(|(&c, &w)| w * v[c as usize])
            .sum()
    }

    fn check_params(&self, params: &BrcParams) -> Result<()> {
        let findings = validate(&self.setting, params);
        if !findings.is_empty() {
            let detail: Vec<String> = findings.into_iter().map(|f| f.detail).collect();
            return Err(BrcError::InvalidArgument(detail.join("; ")));
        }
        if params.model_ensemble != self.ensemble || params.belief_prior_mode != self.belief_prior_mode
        {
            return Err(BrcError::InvalidArgument(
                "parameters name a different ensemble than the kernel was built for".into(),
            ));
        }
        Ok(())
    }

    /// `E_{s~z} υ(s,u)` for every node and action.
    fn expected_utilities(&self, params: &BrcParams) -> Vec<f64> {
        let mut r = Vec::with_capacity(self.num_nodes() * self.num_actions);
        for node in self.lattice.nodes() {
            for u in 0..self.num_actions {
                r.push(params.expected_utility(node.probabilities(), u));
            }
        }
        r
    }

    fn backup_into(&self, params: &BrcParams, utilities: &[f64], v: &[f64], out: &mut Backup) {
        let nu = self.num_actions;
        let nm = self.num_models;
        let prior_models = params.model_ensemble.prior.weights();
        let prior_actions = params.action_prior.weights();
        for node in 0..self.num_nodes() {
            for u in 0..nu {
                let qi = node * nu + u;
                let kslice = &mut out.k[qi * nm..(qi + 1) * nm];
                if self.setting.is_terminal(u) {
                    kslice.iter_mut().for_each(|k| *k = 0.0);
                    out.q[qi] = utilities[qi];
                    continue;
                }
                for (m, k) in kslice.iter_mut().enumerate() {
                    let b = qi * nm + m;
                    *k = params.eta * self.surprise[b]
                        + params.discount * self.expected_next_value(node, u, m, v);
                }
                out.q[qi] = utilities[qi] + soft_expectation_slice(params.beta, prior_models, kslice);
            }
            out.v[node] =
                soft_expectation_slice(params.alpha, prior_actions, &out.q[node * nu..(node + 1) * nu]);
        }
    }
}

/// Result of one application of the optimal backup.
#[derive(Debug, Clone, PartialEq)]
pub struct Backup {
    /// Indexed by node.
    pub v: Vec<f64>,
    /// Flat, indexed by `node * num_actions + action`.
    pub q: Vec<f64>,
    /// Flat, indexed by `(node * num_actions + action) * num_models + model`.
    pub k: Vec<f64>,
}

impl Backup {
    fn zeros(kernel: &BeliefKernel) -> Self {
        let n = kernel.num_nodes();
        let nq = n * kernel.num_actions;
        Self {
            v: vec![0.0; n],
            q: vec![0.0; nq],
            k: vec![0.0; nq * kernel.num_models],
        }
    }
}

/// One optimal backup of `v` on `lattice`.
pub fn backup_optimal(
    lattice: &BeliefLattice,
    v: &[f64],
    params: &BrcParams,
    setting: &ProblemSetting,
) -> Result<Backup> {
    let kernel = BeliefKernel::for_params(setting, params, lattice.resolution())?;
    kernel.backup(params, v)
}

impl BeliefKernel {
    pub fn backup(&self, params: &BrcParams, v: &[f64]) -> Result<Backup> {
        self.check_params(params)?;
        if v.len() != self.num_nodes() || v.iter().any(|x| !x.is_finite()) {
            return Err(BrcError::InvalidArgument(
                "value vector must be finite with one entry per node".into(),
            ));
        }
        let mut out = Backup::zeros(self);
        self.backup_into(params, &self.expected_utilities(params), v, &mut out);
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub resolution: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub warm_start: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub iterations: usize,
    pub residual: f64,
    /// Sup-norm change per sweep.
    pub residuals: Vec<f64>,
}

/// Converged value tables and the parameters that produced them.
#[derive(Debug, Clone)]
pub struct SolvedAgent {
    kernel: Arc<BeliefKernel>,
    params: BrcParams,
    v_star: Vec<f64>,
    q_star: Vec<f64>,
    k_star: Vec<f64>,
    convergence: Convergence,
}

/// Solves the boundedly rational fixed point by value iteration.
pub fn solve(
    setting: &ProblemSetting,
    params: &BrcParams,
    options: &SolveOptions,
) -> Result<SolvedAgent> {
    if options.resolution < 2 {
        return Err(BrcError::InvalidArgument("resolution must be at least 2".into()));
    }
    let kernel = Arc::new(BeliefKernel::for_params(setting, params, options.resolution)?);
    solve_with_kernel(
        kernel,
        params,
        options.tolerance,
        options.max_iterations,
        options.warm_start.as_deref(),
    )
}

/// Value iteration on a prebuilt kernel, optionally warm-started.
pub fn solve_with_kernel(
    kernel: Arc<BeliefKernel>,
    params: &BrcParams,
    tolerance: f64,
    max_iterations: usize,
    warm_start: Option<&[f64]>,
) -> Result<SolvedAgent> {
    kernel.check_params(params)?;
    if !(tolerance > 0.0) {
        return Err(BrcError::InvalidArgument("tolerance must be positive".into()));
    }
    let n = kernel.num_nodes();
    let mut v = match warm_start {
        Some(w) if w.len() == n && w.iter().all(|x| x.is_finite()) => w.to_vec(),
        Some(_) => {
            return Err(BrcError::InvalidArgument(
                "warm start must be finite with one entry per node".into(),
            ))
        }
        None => vec![0.0; n],
    };
    let utilities = kernel.expected_utilities(params);
    let mut next = Backup::zeros(&kernel);
    let mut residuals = Vec::new();
    let mut residual = f64::INFINITY;
    for _ in 0..max_iterations {
        kernel.backup_into(params, &utilities, &v, &mut next);
        residual = v
            .iter()
            .zip(&next.v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, |acc: f64, d| {
                if acc.is_nan() || d.is_nan() {
                    f64::NAN
                } else {
                    acc.max(d)
                }
            });
        residuals.push(residual);
        core::mem::swap(&mut v, &mut next.v);
        if residual.is_nan() {
            break;
        }
        if residual < tolerance {
            return Ok(SolvedAgent {
                kernel,
                params: params.clone(),
                v_star: v,
                q_star: next.q,
                k_star: next.k,
                convergence: Convergence {
                    iterations: residuals.len(),
                    residual,
                    residuals,
                },
            });
        }
    }
    Err(BrcError::NotConverged {
        iterations: residuals.len(),
        residual,
    })
}

/// Read access shared by anything that acts and updates beliefs like an agent.
pub trait AgentPolicy {
    fn setting(&self) -> &ProblemSetting;
    /// Belief at the start of every episode.
    fn initial_belief(&self) -> &Belief;
    fn decision_policy(&self, belief: &Belief) -> Result<DiscreteDistribution>;
    fn recognition_step(&self, belief: &Belief, action: usize, observation: usize) -> Result<Belief>;
}

impl SolvedAgent {
    /// Reassembles an agent from stored tables, rebuilding the kernel.
    pub fn from_tables(
        setting: &ProblemSetting,
        params: BrcParams,
        resolution: usize,
        v_star: Vec<f64>,
        q_star: Vec<f64>,
        k_star: Vec<f64>,
        convergence: Convergence,
    ) -> Result<Self> {
        let kernel = BeliefKernel::for_params(setting, &params, resolution)?;
        kernel.check_params(&params)?;
        let n = kernel.num_nodes();
        let nq = n * kernel.num_actions;
        if v_star.len() != n || q_star.len() != nq || k_star.len() != nq * kernel.num_models {
            return Err(BrcError::InvalidArgument(format!(
                "table sizes ({}, {}, {}) do not match the lattice",
                v_star.len(),
                q_star.len(),
                k_star.len()
            )));
        }
        Ok(Self {
            kernel: Arc::new(kernel),
            params,
            v_star,
            q_star,
            k_star,
            convergence,
        })
    }

    pub fn kernel(&self) -> &Arc<BeliefKernel> {
        &self.kernel
    }

    pub fn lattice(&self) -> &BeliefLattice {
        self.kernel.lattice()
    }

    pub fn params(&self) -> &BrcParams {
        &self.params
    }

    pub fn convergence(&self) -> &Convergence {
        &self.convergence
    }

    pub fn v_star(&self) -> &[f64] {
        &self.v_star
    }

    /// Flat `node * num_actions + action`.
    pub fn q_star(&self) -> &[f64] {
        &self.q_star
    }

    /// Flat `(node * num_actions + action) * num_models + model`.
    pub fn k_star(&self) -> &[f64] {
        &self.k_star
    }

    pub fn q_row(&self, node: usize) -> &[f64] {
        let nu = self.kernel.num_actions;
        &self.q_star[node * nu..(node + 1) * nu]
    }

    pub fn k_slice(&self, node: usize, action: usize) -> &[f64] {
        let nm = self.kernel.num_models;
        let i = node * self.kernel.num_actions + action;
        &self.k_star[i * nm..(i + 1) * nm]
    }

    /// `η` times the expected log-ratio term inside `K*`.
    pub fn surprise_contribution(&self, node: usize, action: usize, model: usize) -> f64 {
        self.params.eta * self.kernel.surprise(node, action, model)
    }

    /// `V*` interpolated at an arbitrary belief.
    pub fn value_at(&self, belief: &Belief) -> Result<f64> {
        self.lattice().interpolate(&self.v_star, belief.probabilities())
    }

    fn stencil(&self, belief: &Belief) -> Result<Stencil> {
        self.lattice().stencil(belief.probabilities())
    }

    /// `Q*(z, ·)` interpolated from the node rows.
    pub fn q_at(&self, belief: &Belief) -> Result<Vec<f64>> {
        let nu = self.kernel.num_actions;
        let mut q = vec![0.0; nu];
        for (node, w) in self.stencil(belief)? {
            for (acc, &v) in q.iter_mut().zip(self.q_row(node)) {
                *acc += w * v;
            }
        }
        Ok(q)
    }

    /// `K*(z, u, ·)` interpolated from the node slices.
    pub fn k_at(&self, belief: &Belief, action: usize) -> Result<Vec<f64>> {
        self.check_action(action)?;
        let mut k = vec![0.0; self.kernel.num_models];
        for (node, w) in self.stencil(belief)? {
            for (acc, &v) in k.iter_mut().zip(self.k_slice(node, action)) {
                *acc += w * v;
            }
        }
        Ok(k)
    }

    fn check_action(&self, action: usize) -> Result<()> {
        if action >= self.kernel.num_actions {
            return Err(BrcError::InvalidArgument(format!("action {action} out of range")));
        }
        Ok(())
    }

    /// `σ*(· | z, u)`: softmax of `K*` at temperature `β` under the model prior.
    pub fn specification_policy(&self, belief: &Belief, action: usize) -> Result<DiscreteDistribution> {
        let k = self.k_at(belief, action)?;
        Ok(soft_policy(self.params.beta, &self.params.model_ensemble.prior, &k))
    }

    /// `π*(· | node)` for every lattice node, row per node.
    pub fn decision_table(&self) -> Vec<Vec<f64>> {
        let nu = self.kernel.num_actions;
        (0..self.kernel.num_nodes())
            .map(|node| {
                let mut row = vec![0.0; nu];
                soft_policy_into(
                    self.params.alpha,
                    self.params.action_prior.weights(),
                    self.q_row(node),
                    &mut row,
                );
                row
            })
            .collect()
    }

    /// `σ*(· | node, u)` for every node and action.
    pub fn specification_table(&self) -> Vec<Vec<Vec<f64>>> {
        let nm = self.kernel.num_models;
        (0..self.kernel.num_nodes())
            .map(|node| {
                (0..self.kernel.num_actions)
                    .map(|u| {
                        let mut row = vec![0.0; nm];
                        soft_policy_into(
                            self.params.beta,
                            self.params.model_ensemble.prior.weights(),
                            self.k_slice(node, u),
                            &mut row,
                        );
                        row
                    })
                    .collect()
            })
            .collect()
    }

    /// `log π*(u | z)`; `-inf` when the action has zero probability.
    pub(crate) fn log_decision_prob(&self, belief: &[f64], action: usize, q: &mut [f64], pi: &mut [f64]) -> Result<f64> {
        q.iter_mut().for_each(|v| *v = 0.0);
        for (node, w) in self.lattice().stencil(belief)? {
            for (acc, &v) in q.iter_mut().zip(self.q_row(node)) {
                *acc += w * v;
            }
        }
        soft_policy_into(self.params.alpha, self.params.action_prior.weights(), q, pi);
        Ok(ln(pi[action]))
    }

    /// In-place recognition step used by the likelihood.
    pub(crate) fn recognition_into(
        &self,
        belief: &[f64],
        action: usize,
        observation: usize,
        scratch: &mut RecognitionScratch,
    ) -> Result<()> {
        if self.kernel.setting.is_terminal(action) {
            return Err(BrcError::InvalidArgument(format!(
                "action {action} is terminal and has no recognition step"
            )));
        }
        let nm = self.kernel.num_models;
        scratch.k[..nm].iter_mut().for_each(|v| *v = 0.0);
        for (node, w) in self.lattice().stencil(belief)? {
            for (acc, &v) in scratch.k.iter_mut().zip(self.k_slice(node, action)) {
                *acc += w * v;
            }
        }
        soft_policy_into(
            self.params.beta,
            self.params.model_ensemble.prior.weights(),
            &scratch.k,
            &mut scratch.sigma,
        );
        mix_posteriors(
            belief,
            action,
            observation,
            &scratch.sigma,
            &self.params.model_ensemble.models,
            &mut scratch.states,
            &mut scratch.next,
        )
    }
}

pub(crate) struct RecognitionScratch {
    pub k: Vec<f64>,
    pub sigma: Vec<f64>,
    pub states: Vec<f64>,
    pub next: Vec<f64>,
}

impl RecognitionScratch {
    pub(crate) fn new(num_states: usize, num_models: usize) -> Self {
        Self {
            k: vec![0.0; num_models],
            sigma: vec![0.0; num_models],
            states: vec![0.0; num_states],
            next: vec![0.0; num_states],
        }
    }
}

impl AgentPolicy for SolvedAgent {
    fn setting(&self) -> &ProblemSetting {
        &self.kernel.setting
    }

    fn initial_belief(&self) -> &Belief {
        &self.params.initial_belief
    }

    /// `π*(· | z)`: softmax of interpolated `Q*` at temperature `α` under `π̃`.
    fn decision_policy(&self, belief: &Belief) -> Result<DiscreteDistribution> {
        let q = self.q_at(belief)?;
        Ok(soft_policy(self.params.alpha, &self.params.action_prior, &q))
    }

    /// Mixture of per-model Bayes updates under `σ*(· | z, u)`.
    fn recognition_step(&self, belief: &Belief, action: usize, observation: usize) -> Result<Belief> {
        self.check_action(action)?;
        if self.kernel.setting.is_terminal(action) {
            return Err(BrcError::InvalidArgument(format!(
                "action {action} is terminal and has no recognition step"
            )));
        }
        let sigma = self.specification_policy(belief, action)?;
        biased_recognition_update(belief, action, observation, &sigma, &self.params.model_ensemble)
    }
}

fn check_policy_tables(
    kernel: &BeliefKernel,
    params: &BrcParams,
    decision: &[Vec<f64>],
    specification: &[Vec<Vec<f64>>],
) -> Result<()> {
    let n = kernel.num_nodes();
    let (nu, nm) = (kernel.num_actions, kernel.num_models);
    if decision.len() != n || specification.len() != n {
        return Err(BrcError::InvalidArgument("policy tables need one row per node".into()));
    }
    let bad = |row: &[f64], prior: &[f64]| {
        let total: f64 = row.iter().sum();
        (total - 1.0).abs() > crate::model::PROB_TOL
            || row
                .iter()
                .zip(prior)
                .any(|(&p, &q)| !(p >= 0.0) || (p > 0.0 && q == 0.0))
    };
    for (node, row) in decision.iter().enumerate() {
        if row.len() != nu || bad(row, params.action_prior.weights()) {
            return Err(BrcError::InvalidArgument(format!(
                "decision row {node} is not a distribution absolutely continuous w.r.t. the action prior"
            )));
        }
        if specification[node].len() != nu {
            return Err(BrcError::InvalidArgument(format!("specification row {node} has wrong size")));
        }
        for (u, srow) in specification[node].iter().enumerate() {
            if srow.len() != nm || bad(srow, params.model_ensemble.prior.weights()) {
                return Err(BrcError::InvalidArgument(format!(
                    "specification row ({node}, {u}) is not a valid model distribution"
                )));
            }
        }
    }
    Ok(())
}

/// `p log(p / q)` with `0 log 0 = 0`.
fn xlogratio(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * ln(p / q)
    }
}

/// Part of each node's policy-evaluation backup that does not depend on `V`.
fn policy_constant(
    kernel: &BeliefKernel,
    params: &BrcParams,
    decision: &[Vec<f64>],
    specification: &[Vec<Vec<f64>>],
) -> Vec<f64> {
    let n = kernel.num_nodes();
    let (nu, nm) = (kernel.num_actions, kernel.num_models);
    let utilities = kernel.expected_utilities(params);
    let prior_u = params.action_prior.weights();
    let prior_m = params.model_ensemble.prior.weights();
    let mut constant = vec![0.0; n];
    for node in 0..n {
        let mut c = 0.0;
        for u in 0..nu {
            let pu = decision[node][u];
            if pu == 0.0 {
                continue;
            }
            let mut inner = utilities[node * nu + u];
            if !kernel.setting.is_terminal(u) {
                for m in 0..nm {
                    let sm = specification[node][u][m];
                    if sm == 0.0 {
                        continue;
                    }
                    inner += -params.beta * xlogratio(sm, prior_m[m])
                        + sm * params.eta * kernel.surprise(node, u, m);
                }
            }
            c += -params.alpha * xlogratio(pu, prior_u[u]) + pu * inner;
        }
        constant[node] = c;
    }
    constant
}

fn policy_sweep(
    kernel: &BeliefKernel,
    params: &BrcParams,
    decision: &[Vec<f64>],
    specification: &[Vec<Vec<f64>>],
    constant: &[f64],
    v: &[f64],
    out: &mut [f64],
) {
    let (nu, nm) = (kernel.num_actions, kernel.num_models);
    for (node, slot) in out.iter_mut().enumerate() {
        let mut acc = constant[node];
        for u in 0..nu {
            let pu = decision[node][u];
            if pu == 0.0 || kernel.setting.is_terminal(u) {
                continue;
            }
            for m in 0..nm {
                let sm = specification[node][u][m];
                if sm != 0.0 {
                    acc += pu * sm * params.discount * kernel.expected_next_value(node, u, m, v);
                }
            }
        }
        *slot = acc;
    }
}

/// One application of the penalized policy-evaluation backup to `v`.
pub fn policy_backup(
    kernel: &BeliefKernel,
    params: &BrcParams,
    decision: &[Vec<f64>],
    specification: &[Vec<Vec<f64>>],
    v: &[f64],
) -> Result<Vec<f64>> {
    kernel.check_params(params)?;
    check_policy_tables(kernel, params, decision, specification)?;
    if v.len() != kernel.num_nodes() {
        return Err(BrcError::InvalidArgument("one value per lattice node is required".into()));
    }
    let constant = policy_constant(kernel, params, decision, specification);
    let mut out = vec![0.0; v.len()];
    policy_sweep(kernel, params, decision, specification, &constant, v, &mut out);
    Ok(out)
}

/// Value of fixed decision and specification policies, all three penalty terms included.
///
/// `decision[node][u]` and `specification[node][u][m]` are given at lattice nodes.
pub fn evaluate_policy(
    kernel: &BeliefKernel,
    params: &BrcParams,
    decision: &[Vec<f64>],
    specification: &[Vec<Vec<f64>>],
    tolerance: f64,
    max_iterations: usize,
) -> Result<Vec<f64>> {
    kernel.check_params(params)?;
    check_policy_tables(kernel, params, decision, specification)?;
    let n = kernel.num_nodes();
    let constant = policy_constant(kernel, params, decision, specification);
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iterations {
        policy_sweep(kernel, params, decision, specification, &constant, &v, &mut next);
        residual = v
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        core::mem::swap(&mut v, &mut next);
        if residual < tolerance {
            return Ok(v);
        }
    }
    Err(BrcError::NotConverged {
        iterations: max_iterations,
        residual,
    })
}

/// Discounted occupancy over lattice nodes under fixed policies.
///
/// Next beliefs are split across the vertices of their containing lattice simplex.
/// Terminal actions restart the episode at the initial belief.
pub fn occupancy_measure(
    kernel: &BeliefKernel,
    params: &BrcParams,
    decision: &[Vec<f64>],
    specification: &[Vec<Vec<f64>>],
    tolerance: f64,
    max_iterations: usize,
) -> Result<DiscreteDistribution> {
    kernel.check_params(params)?;
    check_policy_tables(kernel, params, decision, specification)?;
    let n = kernel.num_nodes();
    let (nu, nm) = (kernel.num_actions, kernel.num_models);
    let gamma = params.discount;
    let mut start = vec![0.0; n];
    for (node, w) in kernel.lattice.stencil(params.initial_belief.probabilities())? {
        start[node] += w;
    }
    let mut mu = start.clone();
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iterations {
        next.iter_mut()
            .zip(&start)
            .for_each(|(x, s)| *x = (1.0 - gamma) * s);
        for node in 0..n {
            let mass = gamma * mu[node];
            if mass == 0.0 {
                continue;
            }
            for u in 0..nu {
                let pu = mass * decision[node][u];
                if pu == 0.0 {
                    continue;
                }
                if kernel.setting.is_terminal(u) {
                    next.iter_mut().zip(&start).for_each(|(x, s)| *x += pu * s);
                    continue;
                }
                for m in 0..nm {
                    let pm = pu * specification[node][u][m];
                    if pm == 0.0 {
                        continue;
                    }
                    let b = kernel.block(node, u, m);
                    let (lo, hi) = (kernel.row_start[b], kernel.row_start[b + 1]);
                    for (&c, &w) in kernel.cols[lo..hi].iter().zip(&kernel.vals[lo..hi]) {
                        next[c as usize] += pm * w;
                    }
                }
            }
        }
        residual = mu
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        core::mem::swap(&mut mu, &mut next);
        if residual < tolerance {
            return DiscreteDistribution::from_unnormalized(mu);
        }
    }
    Err(BrcError::NotConverged {
        iterations: max_iterations,
        residual,
    })
}
