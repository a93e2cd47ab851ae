//! Swap-regret learner: k internal fixed-regret learners glued together by a
//! stationary distribution (the Blum-Mansour construction).
//!
//! Learner `j` is charged this round's loss vector scaled by the master's
//! current probability of playing `j`; the master plays the stationary
//! distribution of the column-stochastic matrix whose column `j` is learner
//! `j`'s distribution. Summing the internal fixed-regret guarantees over the
//! k learners bounds the swap regret by `k * sqrt(2 ln k / T)`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::strategy::MixedStrategy;

use super::hedge::HedgeLearner;
use super::PlaySequence;

/// L1 residual demanded of the stationary-distribution solver at f64.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;

const MAX_POWER_ITERS: usize = 100_000;
/// Mixing weight pulled toward uniform when the chain looks reducible.
const DAMPING: f64 = 1e-8;

/// Solve `P x = x` for a column-stochastic matrix given by its columns.
///
/// Lazy power iteration from uniform (`x <- (x + Px)/2`), which kills
/// periodicity; if the residual stalls the matrix is damped toward uniform
/// and iteration restarts. The returned distribution satisfies
/// `||Px - x||_1 <= tol` against the *original* matrix or an error carrying
/// the residual is returned.
pub fn stationary_distribution<S: Scalar>(
    columns: &[MixedStrategy<S>],
) -> Result<MixedStrategy<S>> {
    let k = columns.len();
    if k == 0 || columns.iter().any(|c| c.k() != k) {
        return Err(Error::contract("stationary solver needs a square matrix"));
    }
    let tol = S::from_f64(STATIONARY_RESIDUAL_TOL).max(
        S::epsilon() * S::from_f64(32.0 * k as f64),
    );

    let apply = |x: &[S], damped: bool| -> Vec<S> {
        let mut out = vec![S::zero(); k];
        for (j, col) in columns.iter().enumerate() {
            let xj = x[j];
            if xj == S::zero() {
                continue;
            }
            for i in 0..k {
                out[i] = out[i] + col.prob(i) * xj;
            }
        }
        if damped {
            let w = S::from_f64(DAMPING);
            let u = S::one() / S::from_f64(k as f64);
            for v in out.iter_mut() {
                *v = (S::one() - w) * *v + w * u;
            }
        }
        out
    };
    let residual = |x: &[S]| -> S {
        let px = apply(x, false);
        px.iter()
            .zip(x)
            .map(|(&a, &b)| (a - b).abs())
            .sum::<S>()
    };

    let half = S::from_f64(0.5);
    let mut x: Vec<S> = vec![S::one() / S::from_f64(k as f64); k];
    let mut damped = false;
    let mut last_check = S::infinity();
    for iter in 0..MAX_POWER_ITERS {
        let px = apply(&x, damped);
        let mut moved = S::zero();
        for i in 0..k {
            let next = half * (x[i] + px[i]);
            moved = moved + (next - x[i]).abs();
            x[i] = next;
        }
        if moved <= tol * half {
            let r = residual(&x);
            if r <= tol {
                return MixedStrategy::new_normalized(x);
            }
            if !damped {
                damped = true;
                continue;
            }
        }
        // Stall detection: residual not shrinking over a long window means a
        // reducible or near-periodic chain; switch on damping once.
        if iter % 4096 == 4095 {
            let r = residual(&x);
            if r <= tol {
                return MixedStrategy::new_normalized(x);
            }
            if r > last_check * S::from_f64(0.5) && !damped {
                damped = true;
            }
            last_check = r;
        }
    }
    let r = residual(&x);
    if r <= tol {
        return MixedStrategy::new_normalized(x);
    }
    Err(Error::numeric(format!(
        "stationary distribution did not converge: residual {r} after {MAX_POWER_ITERS} iterations"
    )))
}

impl<S: Scalar> MixedStrategy<S> {
    /// Normalize solver output that is already non-negative and near-unit.
    fn new_normalized(x: Vec<S>) -> Result<Self> {
        MixedStrategy::from_weights(x)
    }
}

/// The swap-regret learner state: k internal Hedge learners plus the played
/// sequence of stationary distributions.
#[derive(Debug, Clone)]
pub struct SwapLearner<S: Scalar> {
    inner: Vec<HedgeLearner<S>>,
    states: Vec<MixedStrategy<S>>,
}

impl<S: Scalar> SwapLearner<S> {
    /// All internal learners start uniform, so the first stationary
    /// distribution is uniform too.
    pub fn new(k: usize, eta: S) -> Self {
        Self {
            inner: (0..k).map(|_| HedgeLearner::new(k, eta)).collect(),
            states: vec![MixedStrategy::uniform(k)],
        }
    }

    pub fn current(&self) -> &MixedStrategy<S> {
        self.states.last().expect("never empty")
    }

    /// Feed this round's loss: learner `j` sees the loss scaled by the
    /// master's probability of `j`, then the master re-solves.
    pub fn step(&mut self, loss: &[S]) -> Result<()> {
        let k = self.inner.len();
        if loss.len() != k {
            return Err(Error::contract("loss length does not match action count"));
        }
        let play = self.current().clone();
        let mut scaled = vec![S::zero(); k];
        for j in 0..k {
            let p = play.prob(j);
            for m in 0..k {
                scaled[m] = p * loss[m];
            }
            self.inner[j].step(&scaled)?;
        }
        let columns: Vec<MixedStrategy<S>> =
            self.inner.iter().map(|l| l.current().clone()).collect();
        self.states.push(stationary_distribution(&columns)?);
        Ok(())
    }

    pub fn into_sequence(self) -> PlaySequence<S> {
        PlaySequence::new(self.states).expect("non-empty by construction")
    }

    pub fn sequence(&self) -> PlaySequence<S> {
        PlaySequence::new(self.states.clone()).expect("non-empty by construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noregret::{hedge_eta, regret, DeviationFamily, LossMatrix};
    use crate::rng::{stream, StreamKind};
    use rand::Rng;

    fn residual_l1(columns: &[MixedStrategy<f64>], x: &MixedStrategy<f64>) -> f64 {
        let k = columns.len();
        let mut px = vec![0.0; k];
        for (j, col) in columns.iter().enumerate() {
            for i in 0..k {
                px[i] += col.prob(i) * x.prob(j);
            }
        }
        (0..k).map(|i| (px[i] - x.prob(i)).abs()).sum()
    }

    #[test]
    fn uniform_columns_give_uniform_stationary() {
        let cols = vec![MixedStrategy::<f64>::uniform(3); 3];
        let pi = stationary_distribution(&cols).unwrap();
        for j in 0..3 {
            assert!((pi.prob(j) - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn absorbing_state_is_found() {
        // Both learners send everything to action 0.
        let cols = vec![
            MixedStrategy::<f64>::point_mass(2, 0),
            MixedStrategy::<f64>::point_mass(2, 0),
        ];
        let pi = stationary_distribution(&cols).unwrap();
        assert!((pi.prob(0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn periodic_chain_converges_via_laziness() {
        // Swap chain 0 <-> 1: stationary (1/2, 1/2).
        let cols = vec![
            MixedStrategy::<f64>::point_mass(2, 1),
            MixedStrategy::<f64>::point_mass(2, 0),
        ];
        let pi = stationary_distribution(&cols).unwrap();
        assert!((pi.prob(0) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn solver_residual_meets_tolerance_on_random_matrices() {
        let mut rng = stream(5, StreamKind::Aux, 20);
        for _ in 0..50 {
            let k = rng.gen_range(2..6);
            let cols: Vec<MixedStrategy<f64>> = (0..k)
                .map(|_| {
                    let raw: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() + 1e-6).collect();
                    MixedStrategy::from_weights(raw).unwrap()
                })
                .collect();
            let pi = stationary_distribution(&cols).unwrap();
            assert!(residual_l1(&cols, &pi) <= STATIONARY_RESIDUAL_TOL);
        }
    }

    #[test]
    fn constant_losses_yield_negligible_swap_regret() {
        let (t, k) = (1000, 3);
        let mut learner = SwapLearner::<f64>::new(k, hedge_eta(k, t));
        let losses = LossMatrix::from_fn(t, k, |_, _| 0.5_f64);
        for round in 0..t {
            learner.step(losses.row(round)).unwrap();
        }
        let rho = regret(&learner.into_sequence(), &losses, DeviationFamily::Swap).unwrap();
        assert!(rho.abs() <= 1e-9, "swap regret {rho} on constant losses");
    }

    #[test]
    fn swap_regret_stays_below_bound_on_random_losses() {
        let mut rng = stream(6, StreamKind::Aux, 21);
        for &(t, k) in &[(256usize, 2usize), (1024, 4)] {
            let losses = LossMatrix::from_fn(t, k, |_, _| rng.gen::<f64>());
            let mut learner = SwapLearner::new(k, hedge_eta(k, t));
            for round in 0..t {
                learner.step(losses.row(round)).unwrap();
            }
            let bound = k as f64 * (2.0 * (k as f64).ln() / t as f64).sqrt();
            let rho = regret(&learner.into_sequence(), &losses, DeviationFamily::Swap).unwrap();
            assert!(rho <= bound + 1e-9, "rho={rho} bound={bound} T={t} k={k}");
        }
    }

    #[test]
    fn swap_regret_bound_holds_against_argmax_adversary() {
        let (t, k) = (512usize, 3usize);
        let mut learner = SwapLearner::<f64>::new(k, hedge_eta(k, t));
        let mut rows = Vec::with_capacity(t);
        for _ in 0..t {
            let state = learner.current();
            let argmax = (0..k)
                .max_by(|&a, &b| state.prob(a).partial_cmp(&state.prob(b)).unwrap())
                .unwrap();
            let mut row = vec![0.0; k];
            row[argmax] = 1.0;
            learner.step(&row).unwrap();
            rows.push(row);
        }
        let losses = LossMatrix::new(rows).unwrap();
        let bound = k as f64 * (2.0 * (k as f64).ln() / t as f64).sqrt();
        let rho = regret(&learner.into_sequence(), &losses, DeviationFamily::Swap).unwrap();
        assert!(rho <= bound + 1e-9, "adaptive rho={rho} bound={bound}");
    }
}
