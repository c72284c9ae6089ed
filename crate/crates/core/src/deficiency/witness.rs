//! Search for a decision problem on which `κ` beats `μ`.
//!
//! The risk gap `R(μ,ℓ) − R(κ,ℓ)` is a difference of concave functions of
//! the loss. Each step fixes the current optimal strategy for `κ`, which
//! makes `R(κ,·)` linear from above, and maximizes the resulting concave
//! lower bound by LP over `‖ℓ‖_∞ ≤ 1`. The gap never decreases along the
//! way; restarts start from random losses.

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::order::lp_solve;
use crate::probcore::{optimal_risk, optimal_strategy, Channel, DecisionProblem, Prior};

#[derive(Debug, Clone, Copy)]
pub struct SearchBudget {
    pub restarts: usize,
    pub steps_per_restart: usize,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            restarts: 8,
            steps_per_restart: 50,
            seed: 0,
        }
    }
}

/// Gaps below this are treated as rounding noise, not separation.
const MIN_SEPARATION: f64 = 1e-12;

fn risk_gap(dp: &DecisionProblem, mu: &Channel, kappa: &Channel) -> Option<f64> {
    Some(optimal_risk(dp, mu).ok()? - optimal_risk(dp, kappa).ok()?)
}

/// One linearize-and-maximize step. Returns the new loss matrix.
fn ascend(prior: &Prior, mu: &Channel, kappa: &Channel, dp: &DecisionProblem) -> Option<Vec<f64>> {
    let (ns, na, nz) = (prior.len(), dp.actions().len(), mu.n_out());
    let strategy = optimal_strategy(dp, kappa).ok()?;
    let pi = prior.mass();

    let mut pb = Problem::new(OptimizationDirection::Maximize);
    let mut cost = vec![0.0; ns * na];
    for s in 0..ns {
        for (y, &a) in strategy.iter().enumerate() {
            cost[s * na + a] += pi[s] * kappa.get(s, y);
        }
    }
    let loss: Vec<Variable> = cost.iter().map(|&c| pb.add_var(-c, (-1.0, 1.0))).collect();
    for z in 0..nz {
        let u = pb.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
        for a in 0..na {
            let mut row: Vec<(Variable, f64)> = vec![(u, 1.0)];
            for s in 0..ns {
                let w = pi[s] * mu.get(s, z);
                if w != 0.0 {
                    row.push((loss[s * na + a], -w));
                }
            }
            pb.add_constraint(row, ComparisonOp::Le, 0.0);
        }
    }
    let sol = lp_solve(&pb).ok()?;
    Some(loss.iter().map(|&v| sol[v].clamp(-1.0, 1.0)).collect())
}

/// Best-effort search for a loss with `R(κ,ℓ) < R(μ,ℓ)` (actions labelled
/// like `κ`'s outputs). Any returned problem has been verified by direct
/// evaluation of both optimal risks. Meant for pairs where `κ` is not a
/// garbling of `μ`; otherwise it finds nothing.
pub fn witness_loss_search(
    prior: &Prior,
    mu: &Channel,
    kappa: &Channel,
    budget: SearchBudget,
) -> Option<DecisionProblem> {
    if mu.input() != prior.alphabet() || kappa.input() != prior.alphabet() {
        return None;
    }
    if prior.alphabet() == kappa.output() {
        let dp = DecisionProblem::zero_one(prior.clone());
        if risk_gap(&dp, mu, kappa)? > MIN_SEPARATION {
            return Some(dp);
        }
    }

    let actions = kappa.output().clone();
    let n = prior.len() * actions.len();
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut best: Option<(f64, DecisionProblem)> = None;
    for _ in 0..budget.restarts {
        let loss: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let mut dp = DecisionProblem::new(prior.clone(), actions.clone(), loss).ok()?;
        let mut gap = risk_gap(&dp, mu, kappa)?;
        for _ in 0..budget.steps_per_restart {
            let Some(next) = ascend(prior, mu, kappa, &dp) else {
                break;
            };
            let cand = DecisionProblem::new(prior.clone(), actions.clone(), next).ok()?;
            let g = risk_gap(&cand, mu, kappa)?;
            if g <= gap + 1e-12 {
                if g > gap {
                    dp = cand;
                    gap = g;
                }
                break;
            }
            dp = cand;
            gap = g;
        }
        if gap > MIN_SEPARATION && best.as_ref().is_none_or(|(b, _)| gap > *b) {
            best = Some((gap, dp));
        }
    }
    best.map(|(_, dp)| dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probcore::Alphabet;

    #[test]
    fn identity_beats_blind_on_zero_one_loss() {
        let a = Alphabet::range(2);
        let pi = Prior::uniform(a.clone());
        let id = Channel::identity(a.clone());
        let blind = Channel::uniform(a.clone(), a);
        let dp = witness_loss_search(&pi, &blind, &id, SearchBudget::default()).unwrap();
        assert_eq!(optimal_risk(&dp, &id).unwrap(), 0.0);
        assert!((optimal_risk(&dp, &blind).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn finds_witness_by_ascent() {
        // Actions labelled differently from states forces the LP search.
        let pi = Prior::uniform(Alphabet::range(3));
        let kappa = Channel::new(
            Alphabet::range(3),
            Alphabet::new(["a", "b"]).unwrap(),
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]],
        )
        .unwrap();
        let mu = Channel::new(
            Alphabet::range(3),
            Alphabet::range(2),
            vec![vec![0.6, 0.4], vec![0.4, 0.6], vec![0.5, 0.5]],
        )
        .unwrap();
        let dp = witness_loss_search(&pi, &mu, &kappa, SearchBudget::default()).unwrap();
        assert!(optimal_risk(&dp, &kappa).unwrap() < optimal_risk(&dp, &mu).unwrap());
        assert!(dp.loss_norm() <= 1.0);
    }

    #[test]
    fn nothing_to_find_for_a_garbling() {
        let a = Alphabet::range(2);
        let pi = Prior::uniform(a.clone());
        let id = Channel::identity(a.clone());
        let blind = Channel::uniform(a.clone(), Alphabet::new(["u", "v"]).unwrap());
        assert!(witness_loss_search(&pi, &id, &blind, SearchBudget::default()).is_none());
    }
}
