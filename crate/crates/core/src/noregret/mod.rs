//! No-regret learning cores and the regret functionals over play sequences.
//!
//! The learners consume *loss vectors* in `[0,1]^k` and produce mixed
//! strategies; the functionals measure average loss and regret of a stored
//! sequence against the fixed (constant-map) and swap (arbitrary-map)
//! deviation families. Everything here is pure: learners are explicit state
//! transitions, functionals are folds over immutable data.

mod hedge;
mod swap;

pub use hedge::{hedge_eta, hedge_step, HedgeLearner};
pub use swap::{stationary_distribution, SwapLearner, STATIONARY_RESIDUAL_TOL};

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};
use crate::strategy::{DeviationMap, MixedStrategy};

/// A `T x k` matrix of per-round loss vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMatrix<S: Scalar = Real> {
    rows: Vec<Vec<S>>,
    k: usize,
}

impl<S: Scalar> LossMatrix<S> {
    pub fn new(rows: Vec<Vec<S>>) -> Result<Self> {
        let k = rows.first().map(Vec::len).unwrap_or(0);
        if k == 0 {
            return Err(Error::contract("loss matrix needs at least one action"));
        }
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::contract("ragged loss matrix"));
        }
        Ok(Self { rows, k })
    }

    pub fn from_fn(rounds: usize, k: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let rows = (0..rounds)
            .map(|t| (0..k).map(|j| f(t, j)).collect())
            .collect();
        Self { rows, k }
    }

    #[inline]
    pub fn rounds(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[S] {
        &self.rows[t]
    }

    pub fn rows(&self) -> &[Vec<S>] {
        &self.rows
    }

    /// All entries in `[0,1]`: the range the learner guarantees assume.
    pub fn is_clean(&self) -> bool {
        self.entries().all(|l| l >= S::zero() && l <= S::one())
    }

    /// Number of entries outside `[0,1]`; noisy matrices get flagged, not
    /// rejected.
    pub fn escaped_entries(&self) -> usize {
        self.entries()
            .filter(|&l| l < S::zero() || l > S::one())
            .count()
    }

    fn entries(&self) -> impl Iterator<Item = S> + '_ {
        self.rows.iter().flat_map(|r| r.iter().copied())
    }

    /// Affine compression `[0,1] -> [1/3, 2/3]`, entrywise `(l + 1) / 3`.
    ///
    /// The compressed range leaves room for additive noise of magnitude up to
    /// `1/3` without escaping `[0,1]`; regrets scale down by exactly 3.
    pub fn rescale(&self) -> Result<Self> {
        if !self.is_clean() {
            return Err(Error::contract(
                "rescale requires losses in [0,1]".to_string(),
            ));
        }
        let three = S::from_f64(3.0);
        Ok(Self {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|&l| (l + S::one()) / three).collect())
                .collect(),
            k: self.k,
        })
    }

    /// Inverse of [`rescale`](Self::rescale): entrywise `3 l - 1`.
    pub fn unrescale(&self) -> Self {
        let three = S::from_f64(3.0);
        Self {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|&l| three * l - S::one()).collect())
                .collect(),
            k: self.k,
        }
    }

    /// Entrywise sum with a noise matrix.
    pub fn perturbed(&self, noise: &NoiseMatrix<S>) -> Result<Self> {
        if noise.rows.len() != self.rounds() || noise.k != self.k {
            return Err(Error::contract("noise matrix shape mismatch"));
        }
        Ok(Self {
            rows: self
                .rows
                .iter()
                .zip(&noise.rows)
                .map(|(l, z)| l.iter().zip(z).map(|(&a, &b)| a + b).collect())
                .collect(),
            k: self.k,
        })
    }

    /// Entrywise clamp to `[0,1]`, returning the clamp count.
    pub fn clamped01(&self) -> (Self, usize) {
        let mut clamped = 0usize;
        let rows = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&l| {
                        if l < S::zero() {
                            clamped += 1;
                            S::zero()
                        } else if l > S::one() {
                            clamped += 1;
                            S::one()
                        } else {
                            l
                        }
                    })
                    .collect()
            })
            .collect();
        (Self { rows, k: self.k }, clamped)
    }
}

/// Additive noise applied to a loss matrix, tagged with how it was drawn so
/// the applicable tolerance bound can be selected later.
#[derive(Debug, Clone)]
pub struct NoiseMatrix<S: Scalar = Real> {
    rows: Vec<Vec<S>>,
    k: usize,
    kind: NoiseKind<S>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind<S: Scalar = Real> {
    /// Arbitrary entries with `|z| <= bound`.
    Bounded { bound: S },
    /// I.i.d. mean-zero Laplace draws of the given scale.
    Laplace { scale: S },
}

impl<S: Scalar> NoiseMatrix<S> {
    pub fn bounded(rows: Vec<Vec<S>>, bound: S) -> Result<Self> {
        let k = rows.first().map(Vec::len).unwrap_or(0);
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::contract("bad noise matrix shape"));
        }
        if rows
            .iter()
            .flat_map(|r| r.iter())
            .any(|&z| z.abs() > bound)
        {
            return Err(Error::contract(format!(
                "noise entry exceeds declared bound {bound}"
            )));
        }
        Ok(Self {
            rows,
            k,
            kind: NoiseKind::Bounded { bound },
        })
    }

    /// Draw a `rounds x k` matrix of i.i.d. Laplace noise.
    pub fn laplace<R: rand::Rng>(rounds: usize, k: usize, scale: S, rng: &mut R) -> Self {
        let rows = (0..rounds)
            .map(|_| {
                (0..k)
                    .map(|_| crate::privacy::laplace_sample(scale, rng))
                    .collect()
            })
            .collect();
        Self {
            rows,
            k,
            kind: NoiseKind::Laplace { scale },
        }
    }

    pub fn zero(rounds: usize, k: usize) -> Self {
        Self {
            rows: vec![vec![S::zero(); k]; rounds],
            k,
            kind: NoiseKind::Bounded { bound: S::zero() },
        }
    }

    pub fn kind(&self) -> NoiseKind<S> {
        self.kind
    }
}

/// A stored sequence of mixed strategies.
///
/// `states[t]` is the distribution played in round `t + 1`; learner-produced
/// sequences start uniform and carry one trailing post-run state, which the
/// functionals ignore. The functionals accept caller-built sequences of any
/// origin, as long as there are at least as many states as loss rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaySequence<S: Scalar = Real> {
    states: Vec<MixedStrategy<S>>,
}

impl<S: Scalar> PlaySequence<S> {
    pub fn new(states: Vec<MixedStrategy<S>>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::contract("empty play sequence"));
        }
        let k = states[0].k();
        if states.iter().any(|s| s.k() != k) {
            return Err(Error::contract("play sequence mixes action counts"));
        }
        Ok(Self { states })
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.states[0].k()
    }

    pub fn states(&self) -> &[MixedStrategy<S>] {
        &self.states
    }

    #[inline]
    pub fn played(&self, round: usize) -> &MixedStrategy<S> {
        &self.states[round]
    }

    /// Number of playable rounds stored (excluding nothing; a trailing
    /// post-run state simply lets this exceed the loss-matrix length).
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Deviation families the regret functional ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviationFamily {
    /// Constant maps onto a single action (external regret).
    Fixed,
    /// All `k^k` total maps (swap regret).
    Swap,
}

impl DeviationFamily {
    /// Size of the family for `k` actions, as used in tail bounds. The swap
    /// bound follows the printed form `k * log(4k/beta)` rather than
    /// `log(k^k) + log(4/beta)`; the former dominates the latter.
    pub fn log_cardinality_factor(self, k: usize) -> f64 {
        match self {
            DeviationFamily::Fixed => 1.0,
            DeviationFamily::Swap => k as f64,
        }
    }
}

fn check_dims<S: Scalar>(seq: &PlaySequence<S>, losses: &LossMatrix<S>) -> Result<()> {
    if seq.k() != losses.k() {
        return Err(Error::contract("sequence/loss action counts differ"));
    }
    if seq.len() < losses.rounds() {
        return Err(Error::contract(format!(
            "sequence has {} states for {} loss rows",
            seq.len(),
            losses.rounds()
        )));
    }
    if losses.rounds() == 0 {
        return Err(Error::contract("empty loss matrix"));
    }
    Ok(())
}

/// Average per-round expected loss of the sequence on the matrix.
pub fn average_loss<S: Scalar>(seq: &PlaySequence<S>, losses: &LossMatrix<S>) -> Result<S> {
    check_dims(seq, losses)?;
    let t = losses.rounds();
    let mut acc = S::zero();
    for round in 0..t {
        let state = seq.played(round);
        let row = losses.row(round);
        for j in 0..losses.k() {
            acc = acc + state.prob(j) * row[j];
        }
    }
    Ok(acc / S::from_f64(t as f64))
}

/// Average loss the sequence would have incurred had every recommendation
/// been remapped through `map` first.
pub fn average_loss_mapped<S: Scalar>(
    seq: &PlaySequence<S>,
    losses: &LossMatrix<S>,
    map: &DeviationMap,
) -> Result<S> {
    check_dims(seq, losses)?;
    if map.k() != losses.k() {
        return Err(Error::contract("deviation map action count mismatch"));
    }
    let t = losses.rounds();
    let mut acc = S::zero();
    for round in 0..t {
        let state = seq.played(round);
        let row = losses.row(round);
        for j in 0..losses.k() {
            acc = acc + state.prob(j) * row[map.target(j)];
        }
    }
    Ok(acc / S::from_f64(t as f64))
}

/// Regret of the sequence against one specific deviation.
pub fn regret_for<S: Scalar>(
    seq: &PlaySequence<S>,
    losses: &LossMatrix<S>,
    map: &DeviationMap,
) -> Result<S> {
    Ok(average_loss(seq, losses)? - average_loss_mapped(seq, losses, map)?)
}

/// The `k x k` table `c[j][m] = (1/T) * sum_t state_t[j] * loss_t[m]`.
///
/// Every regret quantity is a linear functional of this table, so both the
/// coordinate-wise maximizer and the exhaustive cross-check are computed from
/// the same sums.
pub fn weighted_loss_table<S: Scalar>(
    seq: &PlaySequence<S>,
    losses: &LossMatrix<S>,
) -> Result<Vec<Vec<S>>> {
    check_dims(seq, losses)?;
    let k = losses.k();
    let t = losses.rounds();
    let mut table = vec![vec![S::zero(); k]; k];
    for round in 0..t {
        let state = seq.played(round);
        let row = losses.row(round);
        for j in 0..k {
            let p = state.prob(j);
            if p == S::zero() {
                continue;
            }
            for m in 0..k {
                table[j][m] = table[j][m] + p * row[m];
            }
        }
    }
    let inv_t = S::one() / S::from_f64(t as f64);
    for r in table.iter_mut() {
        for v in r.iter_mut() {
            *v = *v * inv_t;
        }
    }
    Ok(table)
}

/// Regret against a whole family, with the best deviation attained.
///
/// The swap maximum is separable per source action: each source independently
/// retargets to whichever action minimizes its probability-weighted
/// cumulative loss, so no `k^k` enumeration happens.
pub fn regret<S: Scalar>(
    seq: &PlaySequence<S>,
    losses: &LossMatrix<S>,
    family: DeviationFamily,
) -> Result<S> {
    Ok(regret_with_map(seq, losses, family)?.0)
}

/// Like [`regret`] but also returns the maximizing deviation.
pub fn regret_with_map<S: Scalar>(
    seq: &PlaySequence<S>,
    losses: &LossMatrix<S>,
    family: DeviationFamily,
) -> Result<(S, DeviationMap)> {
    let table = weighted_loss_table(seq, losses)?;
    Ok(regret_from_table(&table, family))
}

/// Family-maximal regret straight from a weighted-loss table.
pub fn regret_from_table<S: Scalar>(
    table: &[Vec<S>],
    family: DeviationFamily,
) -> (S, DeviationMap) {
    let k = table.len();
    match family {
        DeviationFamily::Fixed => {
            // lambda - min over constant targets of the mapped loss.
            let own: S = (0..k).map(|j| table[j][j]).sum();
            let mut best = S::infinity();
            let mut best_target = 0;
            for m in 0..k {
                let mapped: S = (0..k).map(|j| table[j][m]).sum();
                if mapped < best {
                    best = mapped;
                    best_target = m;
                }
            }
            (own - best, DeviationMap::constant(k, best_target))
        }
        DeviationFamily::Swap => {
            let mut total = S::zero();
            let mut targets = Vec::with_capacity(k);
            for j in 0..k {
                let mut best = S::infinity();
                let mut best_target = 0;
                for m in 0..k {
                    if table[j][m] < best {
                        best = table[j][m];
                        best_target = m;
                    }
                }
                total = total + (table[j][j] - best);
                targets.push(best_target);
            }
            (total, DeviationMap::new(targets).expect("targets in range"))
        }
    }
}

/// Outcome of a noise-tolerance measurement: the realized regret gap between
/// clean and perturbed losses, and the bound the noise kind warrants.
#[derive(Debug, Clone, Copy)]
pub struct NoiseToleranceReport<S: Scalar = Real> {
    /// `regret(seq, clean) - regret(seq, perturbed)`.
    pub gap: S,
    /// `2b` for bounded noise; the Laplace tail threshold otherwise.
    pub bound: S,
}

impl<S: Scalar> NoiseToleranceReport<S> {
    pub fn within_bound(&self) -> bool {
        self.gap <= self.bound
    }
}

/// Measures how much regret the sequence hides when scored on clean losses
/// instead of the perturbed losses it was trained on.
pub fn noise_tolerance_check<S: Scalar>(
    seq: &PlaySequence<S>,
    clean: &LossMatrix<S>,
    noise: &NoiseMatrix<S>,
    family: DeviationFamily,
    beta: f64,
) -> Result<NoiseToleranceReport<S>> {
    let noisy = clean.perturbed(noise)?;
    let gap = regret(seq, clean, family)? - regret(seq, &noisy, family)?;
    let bound = match noise.kind() {
        NoiseKind::Bounded { bound } => bound + bound,
        NoiseKind::Laplace { scale } => {
            laplace_gap_threshold(losses_k(clean), family, scale, clean.rounds(), beta)
        }
    };
    Ok(NoiseToleranceReport { gap, bound })
}

fn losses_k<S: Scalar>(l: &LossMatrix<S>) -> usize {
    l.k()
}

/// High-probability threshold on the regret gap under i.i.d. Laplace noise:
/// `scale * sqrt(24 * |F| * ln(4k/beta) / T)` with the family factor 1 for
/// fixed deviations and `k` for swap.
pub fn laplace_gap_threshold<S: Scalar>(
    k: usize,
    family: DeviationFamily,
    scale: S,
    rounds: usize,
    beta: f64,
) -> S {
    let factor = family.log_cardinality_factor(k);
    let inner = 24.0 * factor * (4.0 * k as f64 / beta).ln() / rounds as f64;
    scale * S::from_f64(inner.sqrt())
}
