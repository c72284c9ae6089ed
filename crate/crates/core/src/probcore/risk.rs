use super::alphabet::Alphabet;
use super::channel::Channel;
use super::dist::Prior;
use crate::error::{Error, Result};

/// A prior over states, a finite action set and a bounded loss `ℓ(s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionProblem {
    prior: Prior,
    actions: Alphabet,
    /// Row-major `loss[s * |A| + a]`.
    loss: Vec<f64>,
    loss_norm: f64,
}

impl DecisionProblem {
    pub fn new(prior: Prior, actions: Alphabet, loss: Vec<f64>) -> Result<Self> {
        if loss.len() != prior.len() * actions.len() {
            return Err(Error::DimensionMismatch(format!(
                "loss needs {}x{} entries",
                prior.len(),
                actions.len()
            )));
        }
        if loss.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidOptions("loss must be finite".into()));
        }
        let loss_norm = loss.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
        Ok(DecisionProblem {
            prior,
            actions,
            loss,
            loss_norm,
        })
    }

    /// 0–1 loss for guessing the state, with actions labelled like the states.
    pub fn zero_one(prior: Prior) -> Self {
        let n = prior.len();
        let actions = prior.alphabet().clone();
        let loss = (0..n * n)
            .map(|i| if i / n == i % n { 0.0 } else { 1.0 })
            .collect();
        DecisionProblem {
            prior,
            actions,
            loss,
            loss_norm: 1.0,
        }
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    pub fn actions(&self) -> &Alphabet {
        &self.actions
    }

    pub fn loss(&self, s: usize, a: usize) -> f64 {
        self.loss[s * self.actions.len() + a]
    }

    pub fn loss_matrix(&self) -> &[f64] {
        &self.loss
    }

    /// `max |ℓ(s,a)|`.
    pub fn loss_norm(&self) -> f64 {
        self.loss_norm
    }

    /// Expected loss `Σ_z π(s)μ_s(z)ℓ(s,a)` of taking action `a` on output `z`,
    /// for all `(z, a)`.
    fn weighted_losses(&self, channel: &Channel) -> Result<Vec<f64>> {
        if channel.input() != self.prior.alphabet() {
            return Err(Error::AlphabetMismatch(
                "channel input differs from the decision problem's state alphabet".into(),
            ));
        }
        let na = self.actions.len();
        let nz = channel.n_out();
        let mut w = vec![0.0; nz * na];
        for (s, &p) in self.prior.mass().iter().enumerate() {
            for z in 0..nz {
                let pz = p * channel.get(s, z);
                if pz == 0.0 {
                    continue;
                }
                for a in 0..na {
                    w[z * na + a] += pz * self.loss(s, a);
                }
            }
        }
        Ok(w)
    }
}

/// Minimal Bayes risk `Σ_z min_a Σ_s π(s)μ_s(z)ℓ(s,a)` when observing the
/// output of `channel`.
pub fn optimal_risk(dp: &DecisionProblem, channel: &Channel) -> Result<f64> {
    let na = dp.actions.len();
    let w = dp.weighted_losses(channel)?;
    Ok(w.chunks(na)
        .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
        .sum())
}

/// A deterministic strategy attaining [`optimal_risk`]: one action index per
/// channel output (lowest index on ties).
pub fn optimal_strategy(dp: &DecisionProblem, channel: &Channel) -> Result<Vec<usize>> {
    let na = dp.actions.len();
    let w = dp.weighted_losses(channel)?;
    Ok(w.chunks(na)
        .map(|c| {
            let mut best = 0;
            for (a, &v) in c.iter().enumerate() {
                if v < c[best] {
                    best = a;
                }
            }
            best
        })
        .collect())
}
