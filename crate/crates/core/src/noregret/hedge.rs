//! Multiplicative-weights (Hedge) updates: the fixed-regret learner.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::strategy::MixedStrategy;

use super::PlaySequence;

/// The horizon-tuned learning rate `sqrt(2 ln k / T)`.
///
/// Natural log: the standard Hedge analysis produces it, and with this rate
/// the measured average fixed regret stays below `sqrt(2 ln k / T)` on any
/// `[0,1]` loss sequence, adaptive or not.
pub fn hedge_eta<S: Scalar>(k: usize, rounds: usize) -> S {
    assert!(k >= 1 && rounds >= 1);
    S::from_f64((2.0 * (k as f64).ln() / rounds as f64).sqrt())
}

/// One multiplicative update: `w_j = state_j * exp(-eta * loss_j)`,
/// renormalized.
///
/// Losses are expected in `[0,1]`; callers feeding noisy losses clamp first.
/// The exponent is shifted by the row minimum, which changes nothing after
/// normalization but keeps the weights well-scaled.
pub fn hedge_step<S: Scalar>(
    state: &MixedStrategy<S>,
    loss: &[S],
    eta: S,
) -> Result<MixedStrategy<S>> {
    if loss.len() != state.k() {
        return Err(Error::contract("loss length does not match action count"));
    }
    if !(eta > S::zero()) {
        return Err(Error::contract("hedge learning rate must be positive"));
    }
    let min = loss
        .iter()
        .copied()
        .fold(S::infinity(), |a, b| if b < a { b } else { a });
    let weights: Vec<S> = state
        .probs()
        .iter()
        .zip(loss)
        .map(|(&p, &l)| p * (-(eta * (l - min))).exp())
        .collect();
    MixedStrategy::from_weights(weights)
        .map_err(|_| Error::numeric("hedge weights collapsed to zero"))
}

/// A Hedge learner with its stored play sequence.
#[derive(Debug, Clone)]
pub struct HedgeLearner<S: Scalar> {
    eta: S,
    states: Vec<MixedStrategy<S>>,
}

impl<S: Scalar> HedgeLearner<S> {
    /// Starts at the uniform distribution.
    pub fn new(k: usize, eta: S) -> Self {
        Self {
            eta,
            states: vec![MixedStrategy::uniform(k)],
        }
    }

    /// The distribution to play this round.
    pub fn current(&self) -> &MixedStrategy<S> {
        self.states.last().expect("never empty")
    }

    /// Consume this round's loss and advance.
    pub fn step(&mut self, loss: &[S]) -> Result<()> {
        let next = hedge_step(self.current(), loss, self.eta)?;
        self.states.push(next);
        Ok(())
    }

    /// The full sequence: initial uniform state, then one state per step,
    /// the last being the post-run state.
    pub fn into_sequence(self) -> PlaySequence<S> {
        PlaySequence::new(self.states).expect("non-empty by construction")
    }

    pub fn sequence(&self) -> PlaySequence<S> {
        PlaySequence::new(self.states.clone()).expect("non-empty by construction")
    }
}
