//! Exact Bayes updates under a single model and the model-mixture recognition update.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{BrcError, Result};
use crate::model::{Belief, DiscreteDistribution, DynamicsModel, ModelEnsemble};

/// Two next beliefs closer than this are treated as one atom.
pub const ATOM_MERGE_DISTANCE: f64 = 1e-12;

/// A point mass in belief space together with its probability.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefAtom {
    pub belief: Belief,
    pub probability: f64,
}

/// Writes `Σ_s z(s) τ(s'|s,u)` into `out`.
fn predict_states(belief: &[f64], action: usize, model: &DynamicsModel, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (s, &p) in belief.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (next, &t) in model.transition[s][action].iter().enumerate() {
            out[next] += p * t;
        }
    }
}

/// Unnormalized posterior over next states in `out`; returns `P(x' | z, u)`.
pub(crate) fn joint_posterior(
    belief: &[f64],
    action: usize,
    observation: usize,
    model: &DynamicsModel,
    out: &mut [f64],
) -> f64 {
    predict_states(belief, action, model, out);
    let mut total = 0.0;
    for (next, v) in out.iter_mut().enumerate() {
        *v *= model.emission[action][next][observation];
        total += *v;
    }
    total
}

/// Exact posterior over the next state after taking `action` and seeing `observation`.
pub fn bayes_posterior(
    belief: &Belief,
    action: usize,
    observation: usize,
    model: &DynamicsModel,
) -> Result<Belief> {
    let mut out = vec![0.0; model.num_states()];
    let evidence = joint_posterior(belief.probabilities(), action, observation, model, &mut out);
    if !(evidence > 0.0) {
        return Err(BrcError::ImpossibleEvidence {
            action,
            observation,
        });
    }
    out.iter_mut().for_each(|v| *v /= evidence);
    Belief::new(out)
}

/// `P(x' | z, u)` under one model.
pub fn observation_predictive(
    belief: &Belief,
    action: usize,
    model: &DynamicsModel,
) -> DiscreteDistribution {
    let mut next = vec![0.0; model.num_states()];
    predict_states(belief.probabilities(), action, model, &mut next);
    let mut predictive = vec![0.0; model.num_observations()];
    for (s, &p) in next.iter().enumerate() {
        for (x, &o) in model.emission[action][s].iter().enumerate() {
            predictive[x] += p * o;
        }
    }
    DiscreteDistribution::from_unnormalized(predictive)
        .expect("predictive of a validated model is a distribution")
}

/// Distribution over the next belief: one atom per observation with positive probability.
pub fn next_belief_atoms(
    belief: &Belief,
    action: usize,
    model: &DynamicsModel,
) -> Vec<BeliefAtom> {
    let predictive = observation_predictive(belief, action, model);
    let mut atoms: Vec<BeliefAtom> = Vec::with_capacity(predictive.len());
    for (x, &p) in predictive.weights().iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let Ok(next) = bayes_posterior(belief, action, x, model) else {
            continue;
        };
        match atoms
            .iter_mut()
            .find(|a| a.belief.distance(&next) < ATOM_MERGE_DISTANCE)
        {
            Some(atom) => atom.probability += p,
            None => atoms.push(BeliefAtom {
                belief: next,
                probability: p,
            }),
        }
    }
    atoms
}

/// Mixture of per-model Bayes posteriors weighted by `posterior_over_models`.
///
/// Models that give the observation zero probability drop out and the remaining
/// weights are renormalized.
pub fn biased_recognition_update(
    belief: &Belief,
    action: usize,
    observation: usize,
    posterior_over_models: &DiscreteDistribution,
    ensemble: &ModelEnsemble,
) -> Result<Belief> {
    if posterior_over_models.len() != ensemble.len() {
        return Err(BrcError::InvalidArgument(alloc::format!(
            "model posterior has {} weights for {} models",
            posterior_over_models.len(),
            ensemble.len()
        )));
    }
    let n = belief.len();
    let mut mixed = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    mix_posteriors(
        belief.probabilities(),
        action,
        observation,
        posterior_over_models.weights(),
        &ensemble.models,
        &mut scratch,
        &mut mixed,
    )?;
    Belief::new(mixed)
}

pub(crate) fn mix_posteriors(
    belief: &[f64],
    action: usize,
    observation: usize,
    weights: &[f64],
    models: &[DynamicsModel],
    scratch: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    out.iter_mut().for_each(|v| *v = 0.0);
    let mut surviving = 0.0;
    for (&w, model) in weights.iter().zip(models) {
        if w == 0.0 {
            continue;
        }
        let evidence = joint_posterior(belief, action, observation, model, scratch);
        if !(evidence > 0.0) {
            continue;
        }
        for (o, s) in out.iter_mut().zip(scratch.iter()) {
            *o += w * (s / evidence);
        }
        surviving += w;
    }
    if !(surviving > 0.0) {
        return Err(BrcError::ImpossibleEvidence {
            action,
            observation,
        });
    }
    if surviving != 1.0 {
        out.iter_mut().for_each(|v| *v /= surviving);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_like(acc_pos: f64, acc_neg: f64) -> DynamicsModel {
        let identity = vec![vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]];
        let emission = vec![vec![
            vec![acc_pos, 1.0 - acc_pos],
            vec![1.0 - acc_neg, acc_neg],
        ]];
        DynamicsModel::new(identity, emission).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn positive_test_from_uniform() {
        let m = diag_like(0.7, 0.7);
        let z1 = bayes_posterior(&Belief::uniform(2), 0, 0, &m).unwrap();
        assert!(close(z1.probabilities(), &[0.7, 0.3], 1e-12));
        let z2 = bayes_posterior(&z1, 0, 0, &m).unwrap();
        assert!(close(z2.probabilities(), &[0.49 / 0.58, 0.09 / 0.58], 1e-12));
    }

    #[test]
    fn degenerate_belief_is_fixed() {
        let m = diag_like(0.7, 0.7);
        let z = bayes_posterior(&Belief::point(2, 0), 0, 1, &m).unwrap();
        assert_eq!(z.probabilities(), &[1.0, 0.0]);
    }

    #[test]
    fn zero_probability_observation_is_an_error() {
        let m = diag_like(1.0, 0.7);
        let err = bayes_posterior(&Belief::point(2, 0), 0, 1, &m).unwrap_err();
        assert_eq!(
            err,
            BrcError::ImpossibleEvidence {
                action: 0,
                observation: 1
            }
        );
    }

    #[test]
    fn predictive_matches_enumeration() {
        let m = diag_like(0.7, 0.7);
        let p = observation_predictive(&Belief::uniform(2), 0, &m);
        assert!(close(p.weights(), &[0.5, 0.5], 1e-15));
        let p = observation_predictive(&Belief::point(2, 0), 0, &m);
        assert!(close(p.weights(), &[0.7, 0.3], 1e-15));
        let det = diag_like(1.0, 1.0);
        let p = observation_predictive(&Belief::point(2, 1), 0, &det);
        assert_eq!(p.weights(), &[0.0, 1.0]);
    }

    #[test]
    fn atoms_from_uniform_belief() {
        let atoms = next_belief_atoms(&Belief::uniform(2), 0, &diag_like(0.7, 0.7));
        assert_eq!(atoms.len(), 2);
        assert!(close(atoms[0].belief.probabilities(), &[0.7, 0.3], 1e-12));
        assert!(close(atoms[1].belief.probabilities(), &[0.3, 0.7], 1e-12));
        assert!((atoms[0].probability - 0.5).abs() < 1e-15);
        assert!((atoms[1].probability - 0.5).abs() < 1e-15);
    }

    #[test]
    fn atoms_merge_for_degenerate_belief() {
        let atoms = next_belief_atoms(&Belief::point(2, 0), 0, &diag_like(0.7, 0.7));
        assert_eq!(atoms.len(), 1);
        assert!((atoms[0].probability - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mixture_of_two_accuracies() {
        let ensemble = ModelEnsemble::new(
            vec![diag_like(0.6, 0.6), diag_like(0.8, 0.8)],
            DiscreteDistribution::uniform(2),
        )
        .unwrap();
        let z = biased_recognition_update(
            &Belief::uniform(2),
            0,
            0,
            &DiscreteDistribution::uniform(2),
            &ensemble,
        )
        .unwrap();
        assert!(close(z.probabilities(), &[0.7, 0.3], 1e-12));
    }

    #[test]
    fn dirac_model_posterior_equals_bayes() {
        let ensemble = ModelEnsemble::new(
            vec![diag_like(0.6, 0.55), diag_like(0.8, 0.9)],
            DiscreteDistribution::uniform(2),
        )
        .unwrap();
        let z = Belief::new(vec![0.35, 0.65]).unwrap();
        let mixed =
            biased_recognition_update(&z, 0, 1, &DiscreteDistribution::point(2, 1), &ensemble)
                .unwrap();
        let exact = bayes_posterior(&z, 0, 1, &ensemble.models[1]).unwrap();
        assert_eq!(mixed, exact);
    }

    #[test]
    fn impossible_model_is_renormalized_away() {
        let ensemble = ModelEnsemble::new(
            vec![diag_like(1.0, 1.0), diag_like(0.7, 0.7)],
            DiscreteDistribution::uniform(2),
        )
        .unwrap();
        // Under the first model x- is impossible from s+.
        let z = biased_recognition_update(
            &Belief::point(2, 0),
            0,
            1,
            &DiscreteDistribution::uniform(2),
            &ensemble,
        )
        .unwrap();
        assert_eq!(z.probabilities(), &[1.0, 0.0]);

        let only_impossible =
            ModelEnsemble::new(vec![diag_like(1.0, 1.0)], DiscreteDistribution::point(1, 0))
                .unwrap();
        assert!(matches!(
            biased_recognition_update(
                &Belief::point(2, 0),
                0,
                1,
                &DiscreteDistribution::point(1, 0),
                &only_impossible,
            ),
            Err(BrcError::ImpossibleEvidence { .. })
        ));
    }
}
