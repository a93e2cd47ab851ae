//! The two recommender mechanisms: per-entry Laplace perturbation for games
//! with few actions, and the candidate-net query mechanism for games with
//! bounded type spaces.

pub mod laplace;
pub mod median;

use crate::equilibrium::CorrelatedDistribution;
use crate::error::{Error, Result};
use crate::noregret::{hedge_eta, HedgeLearner, LossMatrix, PlaySequence, SwapLearner};
use crate::scalar::Real;
use crate::strategy::MixedStrategy;

/// Which no-regret core drives each player.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerKind {
    Fixed,
    Swap,
}

impl LearnerKind {
    pub fn label(self) -> &'static str {
        match self {
            LearnerKind::Fixed => "fixed",
            LearnerKind::Swap => "swap",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(LearnerKind::Fixed),
            "swap" => Ok(LearnerKind::Swap),
            other => Err(Error::format(format!("unknown learner {other:?}"))),
        }
    }
}

/// Uniform learner wrapper so mechanisms are generic over the two cores.
#[derive(Debug, Clone)]
pub(crate) enum Learner {
    Fixed(HedgeLearner<Real>),
    Swap(SwapLearner<Real>),
}

impl Learner {
    pub fn new(kind: LearnerKind, k: usize, rounds: u64) -> Self {
        let eta = hedge_eta(k, rounds as usize);
        match kind {
            LearnerKind::Fixed => Learner::Fixed(HedgeLearner::new(k, eta)),
            LearnerKind::Swap => Learner::Swap(SwapLearner::new(k, eta)),
        }
    }

    pub fn current(&self) -> &MixedStrategy {
        match self {
            Learner::Fixed(l) => l.current(),
            Learner::Swap(l) => l.current(),
        }
    }

    pub fn step(&mut self, loss: &[Real]) -> Result<()> {
        match self {
            Learner::Fixed(l) => l.step(loss),
            Learner::Swap(l) => l.step(loss),
        }
    }

    pub fn sequence(&self) -> PlaySequence {
        match self {
            Learner::Fixed(l) => l.sequence(),
            Learner::Swap(l) => l.sequence(),
        }
    }
}

/// How the run's round count was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundSource {
    /// Largest round count satisfying the printed constraint.
    Constraint,
    /// The constraint is infeasible at these parameters; the run used the
    /// accuracy-target prescription instead and says so.
    AccuracyTarget,
    /// Caller-supplied override.
    Explicit,
}

impl RoundSource {
    pub fn label(self) -> &'static str {
        match self {
            RoundSource::Constraint => "constraint",
            RoundSource::AccuracyTarget => "accuracy_target",
            RoundSource::Explicit => "explicit",
        }
    }
}

/// A completed mechanism run. Everything is immutable after construction;
/// the noisy-loss ledger is retained because it is a post-processing input
/// the audits replay.
#[derive(Debug, Clone)]
pub struct MechanismRun {
    pub n: usize,
    pub k: usize,
    pub t: u64,
    /// Played states per player: `states[0..T]` were played, the final entry
    /// is the post-run state (absent for pinned players).
    pub sequences: Vec<PlaySequence>,
    /// Clean expected losses actually realized, per player.
    pub true_losses: Vec<LossMatrix>,
    /// What each learner consumed: rescaled, perturbed, clamped.
    pub fed_losses: Vec<LossMatrix>,
    /// Clamp counts per player per round.
    pub clamped: Vec<Vec<u32>>,
    pub predicted_alpha: f64,
    pub round_source: RoundSource,
    pub constraint_satisfied: bool,
    pub ledger_draws: u64,
    pub composed_epsilon: f64,
    pub composed_delta: f64,
    pub sigma: f64,
    pub per_step_epsilon: f64,
    pub loss_mode: &'static str,
    pub seed: u64,
}

impl MechanismRun {
    /// The induced correlated action distribution: one product profile per
    /// played round.
    pub fn distribution(&self) -> CorrelatedDistribution {
        let t = self.t as usize;
        let sequences: Vec<Vec<MixedStrategy>> = self
            .sequences
            .iter()
            .map(|s| s.states()[..t].to_vec())
            .collect();
        CorrelatedDistribution::from_sequences(&sequences).expect("run is well formed")
    }

    pub fn total_clamped(&self) -> u64 {
        self.clamped
            .iter()
            .flat_map(|r| r.iter())
            .map(|&c| u64::from(c))
            .sum()
    }

    /// Everything delivered to players other than `player`: the object joint
    /// differential privacy speaks about.
    pub fn joint_view(&self, player: usize) -> JointView {
        JointView {
            sequences: self
                .sequences
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != player)
                .map(|(_, s)| s.clone())
                .collect(),
            fed_losses: self
                .fed_losses
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != player)
                .map(|(_, l)| l.clone())
                .collect(),
        }
    }
}

/// The outputs excluding one player's own component.
#[derive(Debug, Clone)]
pub struct JointView {
    pub sequences: Vec<PlaySequence>,
    pub fed_losses: Vec<LossMatrix>,
}

impl JointView {
    pub fn noisy_entries(&self) -> usize {
        self.fed_losses.iter().map(|l| l.rounds() * l.k()).sum()
    }
}
