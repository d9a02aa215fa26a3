#![allow(dead_code)]

pub mod classical;

use brc_core::{Belief, DynamicsModel};
use rand::Rng;

pub fn random_simplex<R: Rng>(rng: &mut R, n: usize, sparse: bool) -> Vec<f64> {
    loop {
        let mut w: Vec<f64> = (0..n)
            .map(|_| {
                if sparse && rng.random::<f64>() < 0.2 {
                    0.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            w.iter_mut().for_each(|x| *x /= total);
            return w;
        }
    }
}

pub fn random_belief<R: Rng>(rng: &mut R, n: usize) -> Belief {
    Belief::new(random_simplex(rng, n, true)).unwrap()
}

pub fn random_model<R: Rng>(rng: &mut R, states: usize, actions: usize, observations: usize) -> DynamicsModel {
    let transition = (0..states)
        .map(|_| (0..actions).map(|_| random_simplex(rng, states, true)).collect())
        .collect();
    let emission = (0..actions)
        .map(|_| (0..states).map(|_| random_simplex(rng, observations, true)).collect())
        .collect();
    DynamicsModel::new(transition, emission).unwrap()
}

/// Posterior over next states by summing the joint over every `(s, s')` pair.
pub fn enumerated_posterior(belief: &[f64], action: usize, observation: usize, model: &DynamicsModel) -> Option<Vec<f64>> {
    let n = belief.len();
    let mut joint = vec![0.0; n];
    for s in 0..n {
        for s_next in 0..n {
            joint[s_next] += belief[s]
                * model.transition_prob(s, action, s_next)
                * model.emission_prob(action, s_next, observation);
        }
    }
    let evidence: f64 = joint.iter().sum();
    (evidence > 0.0).then(|| joint.iter().map(|j| j / evidence).collect())
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
