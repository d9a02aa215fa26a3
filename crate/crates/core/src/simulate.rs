//! Agent–environment interaction and belief reconstruction from recorded episodes.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BrcError, Result};
use crate::math::mix_seed;
use crate::model::{Belief, DynamicsModel, ProblemSetting, Trajectory};
use crate::solver::AgentPolicy;

/// The real world the agent acts in. Its dynamics need not be among the agent's candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub setting: ProblemSetting,
    pub truth: DynamicsModel,
    /// `utility[s][u]`, used to score terminal actions.
    pub utility: Vec<Vec<f64>>,
}

pub(crate) fn sample_index<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if r < acc {
            return i;
        }
    }
    last
}

/// Runs one episode: the environment steps with the true dynamics, the agent acts by
/// its decision policy and updates its belief by its recognition policy. Episodes
/// longer than `max_length` actions are cut and flagged as truncated.
pub fn sample_trajectory<A: AgentPolicy + ?Sized>(
    env: &Environment,
    agent: &A,
    seed: u64,
    max_length: usize,
) -> Result<Trajectory> {
    let setting = &env.setting;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut belief = agent.initial_belief().clone();
    let mut state = sample_index(&mut rng, belief.probabilities());
    let mut actions = Vec::new();
    let mut observations = Vec::new();
    let mut states = Vec::new();
    let mut final_utility = None;
    for _ in 0..max_length {
        let policy = agent.decision_policy(&belief)?;
        let action = sample_index(&mut rng, policy.weights());
        let next_state = sample_index(&mut rng, &env.truth.transition[state][action]);
        let observation = sample_index(&mut rng, &env.truth.emission[action][next_state]);
        actions.push(action);
        observations.push(observation);
        states.push(state);
        if setting.is_terminal(action) {
            final_utility = Some(env.utility[state][action]);
            break;
        }
        belief = agent.recognition_step(&belief, action, observation)?;
        state = next_state;
    }
    let mut trajectory = Trajectory::new(actions, observations)?.with_hidden_states(states)?;
    trajectory.truncated = final_utility.is_none();
    trajectory.final_utility = final_utility;
    Ok(trajectory)
}

/// Seed of trajectory `index` within a dataset drawn with `master_seed`.
pub fn trajectory_seed(master_seed: u64, index: u64) -> u64 {
    mix_seed(master_seed, index)
}

/// `n` independent episodes; trajectory `i` uses [`trajectory_seed`]`(master_seed, i)`.
pub fn generate_dataset<A: AgentPolicy + ?Sized>(
    env: &Environment,
    agent: &A,
    n: usize,
    master_seed: u64,
    max_length: usize,
) -> Result<Vec<Trajectory>> {
    (0..n)
        .map(|i| sample_trajectory(env, agent, trajectory_seed(master_seed, i as u64), max_length))
        .collect()
}

/// Beliefs `z_0..z_T` at which each recorded action was chosen, rebuilt from the
/// observable history only.
pub fn belief_trace<A: AgentPolicy + ?Sized>(trajectory: &Trajectory, agent: &A) -> Result<Vec<Belief>> {
    trajectory.check(agent.setting())?;
    let mut beliefs = vec![agent.initial_belief().clone()];
    let steps = trajectory.len();
    for (t, (action, observation)) in trajectory.steps().enumerate() {
        if t + 1 == steps {
            break;
        }
        if agent.setting().is_terminal(action) {
            return Err(BrcError::InvalidArgument(
                "terminal action before the end of a trajectory".into(),
            ));
        }
        let next = agent.recognition_step(&beliefs[t], action, observation)?;
        beliefs.push(next);
    }
    Ok(beliefs)
}
