//! The Laplace-noise no-regret mechanism.
//!
//! Every round, each player's expected losses are computed against the
//! current product profile, compressed into `[1/3, 2/3]`, perturbed with
//! i.i.d. Laplace noise calibrated so that the full transcript of noisy
//! losses delivered to the other players composes to the target budget, and
//! fed to that player's learner. Output: each player's strategy sequence and
//! the noisy-loss ledger.

use crate::error::{Error, Result};
use crate::game::{default_loss_mode, expected_losses_all, Game, LossMode};
use crate::noregret::LossMatrix;
use crate::privacy::{
    laplace_accuracy_target_t, laplace_constraint_margin, laplace_sample, plan_laplace_rounds,
    predicted_alpha_laplace, BudgetLedger, NoisePlan, PlanOutcome, PrivacyBudget,
};
use crate::rng::{stream, Stream, StreamKind};
use crate::strategy::MixedStrategy;

use super::{Learner, LearnerKind, MechanismRun, RoundSource};

/// Default ceiling on rounds actually executed.
pub const DEFAULT_T_CAP: u64 = 4096;

#[derive(Debug, Clone)]
pub struct LaplaceParams {
    pub budget: PrivacyBudget,
    pub beta: f64,
    pub learner: LearnerKind,
    pub seed: u64,
    /// Explicit round count; skips the constraint solver (the run still
    /// records whether the constraint held).
    pub t_override: Option<u64>,
    pub t_cap: u64,
    /// Loss backend override; defaults to the game's natural backend.
    pub loss_mode: Option<LossMode>,
    /// Noise-stream key per seat. Defaults to the seat index; the incentive
    /// auditor passes the original player ids when re-running a reduced game
    /// so the surviving players keep their exact noise draws.
    pub stream_ids: Option<Vec<u64>>,
}

impl LaplaceParams {
    pub fn new(budget: PrivacyBudget, beta: f64, learner: LearnerKind, seed: u64) -> Self {
        Self {
            budget,
            beta,
            learner,
            seed,
            t_override: None,
            t_cap: DEFAULT_T_CAP,
            loss_mode: None,
            stream_ids: None,
        }
    }
}

/// Resolve the round count for a game/budget pair.
///
/// Auto mode takes the largest constraint-feasible `T`. When the constraint
/// admits no round at all — routine at desk scale, where the accuracy
/// envelopes are vacuous anyway — the run falls back to the accuracy-target
/// prescription `T ~ 1/(gamma^2 n k)` and flags itself, keeping the exact
/// budget accounting intact (the noise scale always composes back to the
/// target). Parameters where even that prescription collapses below one
/// round are rejected as infeasible.
pub fn resolve_rounds(
    game: &dyn Game,
    params: &LaplaceParams,
) -> Result<(u64, RoundSource, bool)> {
    let (n, k) = (game.player_count(), game.action_count());
    let gamma = game.declared_sensitivity();
    let (eps, delta, beta) = (params.budget.epsilon, params.budget.delta, params.beta);
    if let Some(t) = params.t_override {
        if t == 0 {
            return Err(Error::contract("t override must be >= 1"));
        }
        let ok = laplace_constraint_margin(n, k, t, gamma, eps, delta, beta) <= 0.0;
        return Ok((t, RoundSource::Explicit, ok));
    }
    match plan_laplace_rounds(n, k, gamma, eps, delta, beta, params.t_cap)? {
        PlanOutcome::Feasible(plan) => Ok((plan.t, RoundSource::Constraint, true)),
        PlanOutcome::Infeasible { lhs, rhs } => {
            let target = laplace_accuracy_target_t(n, k, gamma);
            match target {
                Some(t) => Ok((t.min(params.t_cap), RoundSource::AccuracyTarget, false)),
                None => Err(Error::Infeasible {
                    constraint: "sigma(T) <= 1/(6 ln(4nkT/beta)) and T >= 1".into(),
                    lhs,
                    rhs,
                    t: 1,
                }),
            }
        }
    }
}

/// Run the mechanism.
pub fn run(game: &dyn Game, params: &LaplaceParams) -> Result<MechanismRun> {
    run_with_pinned(game, params, None)
}

/// Structural-privacy instrumentation: run with one player's played sequence
/// replaced by a fixed script. The pinned player's learner never executes and
/// its noise stream is never consumed, so everything another player receives
/// depends on the pinned player only through the scripted strategies. Tests
/// use this to check, bit for bit, that a player's type reaches other
/// players' losses only through that player's round strategies.
pub fn run_with_pinned(
    game: &dyn Game,
    params: &LaplaceParams,
    pinned: Option<(usize, &[MixedStrategy])>,
) -> Result<MechanismRun> {
    let n = game.player_count();
    let k = game.action_count();
    let gamma = game.declared_sensitivity();
    let (t, round_source, constraint_satisfied) = resolve_rounds(game, params)?;
    let plan = NoisePlan {
        t,
        sigma: crate::privacy::laplace_noise_scale(
            n,
            k,
            t,
            gamma,
            params.budget.epsilon,
            params.budget.delta,
        ),
        per_step_epsilon: crate::privacy::per_step_epsilon(
            params.budget.epsilon,
            params.budget.delta,
            (n * k) as u64 * t,
        ),
        steps: (n * k) as u64 * t,
        constraint_satisfied,
    };
    if let Some((p, script)) = pinned {
        if p >= n {
            return Err(Error::contract("pinned player out of range"));
        }
        if script.len() < t as usize {
            return Err(Error::contract("pinned script shorter than the run"));
        }
    }

    let loss_mode = params.loss_mode.unwrap_or_else(|| default_loss_mode(game));
    let mut loss_rng = stream(params.seed, StreamKind::PlayerLoss, 0);
    let loss_rng_opt: Option<&mut Stream> = match loss_mode {
        LossMode::MonteCarlo { .. } => Some(&mut loss_rng),
        _ => None,
    };
    // One noise stream per player, keyed by a stable id so that dropping a
    // player from the game leaves everyone else's draws untouched.
    if let Some(ids) = &params.stream_ids {
        if ids.len() != n {
            return Err(Error::contract("stream_ids length must equal player count"));
        }
    }
    let stream_id = |i: usize| -> u64 {
        params
            .stream_ids
            .as_ref()
            .map(|ids| ids[i])
            .unwrap_or(i as u64)
    };
    let mut noise_streams: Vec<Stream> = (0..n)
        .map(|i| stream(params.seed, StreamKind::PlayerNoise, stream_id(i)))
        .collect();

    let mut learners: Vec<Option<Learner>> = (0..n)
        .map(|i| match pinned {
            Some((p, _)) if p == i => None,
            _ => Some(Learner::new(params.learner, k, t)),
        })
        .collect();
    let mut ledger = BudgetLedger::new(&plan, params.budget.delta);
    let mut true_rows: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(t as usize); n];
    let mut fed_rows: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(t as usize); n];
    let mut clamped: Vec<Vec<u32>> = vec![Vec::with_capacity(t as usize); n];

    let mut loss_rng_holder = loss_rng_opt;
    for round in 0..t as usize {
        let strategies: Vec<MixedStrategy> = (0..n)
            .map(|i| match (pinned, &learners[i]) {
                (Some((p, script)), _) if p == i => script[round].clone(),
                (_, Some(l)) => l.current().clone(),
                _ => unreachable!(),
            })
            .collect();
        let losses = expected_losses_all(game, &strategies, loss_mode, loss_rng_holder.as_deref_mut())
            .map_err(|e| Error::numeric(format!("loss oracle failed in round {round}: {e}")))?;
        for i in 0..n {
            true_rows[i].push(losses[i].values.clone());
            if learners[i].is_none() {
                continue;
            }
            let mut fed = Vec::with_capacity(k);
            let mut clamps = 0u32;
            for j in 0..k {
                let rescaled = (losses[i].values[j] + 1.0) / 3.0;
                let noisy = if plan.sigma > 0.0 {
                    rescaled + laplace_sample(plan.sigma, &mut noise_streams[i])
                } else {
                    rescaled
                };
                let clamped_value = noisy.clamp(0.0, 1.0);
                if clamped_value != noisy {
                    clamps += 1;
                }
                fed.push(clamped_value);
            }
            ledger.record(k as u64);
            learners[i]
                .as_mut()
                .expect("checked above")
                .step(&fed)
                .map_err(|e| Error::numeric(format!("learner failed in round {round}: {e}")))?;
            fed_rows[i].push(fed);
            clamped[i].push(clamps);
        }
    }

    let sequences = (0..n)
        .map(|i| match (&learners[i], pinned) {
            (Some(l), _) => l.sequence(),
            (None, Some((_, script))) => {
                crate::noregret::PlaySequence::new(script[..t as usize].to_vec())
                    .expect("script validated")
            }
            _ => unreachable!(),
        })
        .collect();
    let (composed_epsilon, composed_delta) = ledger.composed();
    Ok(MechanismRun {
        n,
        k,
        t,
        sequences,
        true_losses: true_rows
            .into_iter()
            .map(|rows| LossMatrix::new(rows).expect("true losses well formed"))
            .collect(),
        fed_losses: fed_rows
            .into_iter()
            .map(|rows| {
                if rows.is_empty() {
                    // Pinned player consumed nothing; keep the shape regular.
                    LossMatrix::new(vec![vec![0.0; k]; t as usize]).expect("placeholder")
                } else {
                    LossMatrix::new(rows).expect("fed losses well formed")
                }
            })
            .collect(),
        clamped,
        predicted_alpha: predicted_alpha_laplace(
            n,
            k,
            t,
            gamma,
            params.budget.epsilon,
            params.budget.delta,
            params.beta,
        ),
        round_source,
        constraint_satisfied,
        ledger_draws: ledger.draws(),
        composed_epsilon,
        composed_delta,
        sigma: plan.sigma,
        per_step_epsilon: plan.per_step_epsilon,
        loss_mode: loss_mode.label(),
        seed: params.seed,
    })
}
