//! Bounded rational control for partially observable problems under model
//! uncertainty: forward planning on a belief lattice, Bayesian and biased belief
//! recognition, simulation, and inference of boundedness parameters from behaviour.
//!
//! The crate is `no_std` with `alloc` when built without the default `std` feature.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod diag;
pub mod error;
pub mod inverse;
pub mod lattice;
mod math;
pub mod model;
pub mod recognition;
pub mod simulate;
pub mod solver;

pub use error::{BrcError, Result};
pub use inverse::{
    dataset_log_likelihood, irl_baseline, mh_infer, posterior_summary, run_chain,
    trajectory_log_likelihood, InferenceConfig, InferenceRun, IrlBaselineConfig,
    LikelihoodEvaluator, PosteriorSample, PosteriorSummary, Target,
};
pub use lattice::{lattice_interpolate, BeliefLattice};
pub use math::mix_seed;
pub use model::{
    validate, Belief, BeliefPriorMode, BrcParams, DiscreteDistribution, DynamicsModel,
    Finding, FindingKind, ModelEnsemble, ParamField, ProblemSetting, Trajectory,
};
pub use recognition::{bayes_posterior, biased_recognition_update, next_belief_atoms};
pub use simulate::{belief_trace, generate_dataset, sample_trajectory, Environment};
pub use solver::{
    backup_optimal, evaluate_policy, occupancy_measure, policy_backup, soft_expectation, soft_policy, solve,
    solve_with_kernel, AgentPolicy, BeliefKernel, SolveOptions, SolvedAgent,
};
