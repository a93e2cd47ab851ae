//! The candidate-net no-regret mechanism for games with bounded type spaces.
//!
//! A net of all `U^n` type tuples backs an adaptive query-answering
//! mechanism. Per round, for every (player, action, hypothetical type), the
//! query asks for that player's rescaled expected loss, where every other
//! player's strategy is reconstructed from the *shared* table of past
//! answers and that player's (candidate) type. Queries whose median over
//! live candidates already agrees with the truth are answered by the median
//! and cost nothing; disagreeing ("hard") queries are answered with
//! calibrated noise and prune the candidates they expose, and only a bounded
//! number of them may occur. Each player finally runs its learner on the
//! slice matching its true type, so the whole output is one shared private
//! object plus per-player postprocessing.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::game::{expected_loss_as, Game, LossMode, PlayerType};
use crate::noregret::{LossMatrix, PlaySequence};
use crate::privacy::{
    laplace_sample, median_accuracy_bound, plan_median_rounds, predicted_alpha_median,
    PlanOutcome, PrivacyBudget,
};
use crate::rng::{stream, StreamKind};
use crate::strategy::MixedStrategy;

use super::{Learner, LearnerKind, MechanismRun, RoundSource};

/// Candidate-net size cap: `U^n` tuples are enumerated explicitly.
pub const NET_CAP: f64 = 1e6;

#[derive(Debug, Clone)]
pub struct MedianParams {
    pub budget: PrivacyBudget,
    pub beta: f64,
    pub learner: LearnerKind,
    pub seed: u64,
    pub t_override: Option<u64>,
    pub t_cap: u64,
}

impl MedianParams {
    pub fn new(budget: PrivacyBudget, beta: f64, learner: LearnerKind, seed: u64) -> Self {
        Self {
            budget,
            beta,
            learner,
            seed,
            t_override: None,
            t_cap: super::laplace::DEFAULT_T_CAP,
        }
    }
}

/// The shared answer table: for each round, one (rescaled, noisy) loss per
/// (player, action, type). Identical from every player's perspective by
/// construction; players differ only in which slice they postprocess.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedLossTable {
    n: usize,
    k: usize,
    u: usize,
    rounds: Vec<Vec<f64>>,
}

impl SharedLossTable {
    fn new(n: usize, k: usize, u: usize) -> Self {
        Self {
            n,
            k,
            u,
            rounds: Vec::new(),
        }
    }

    #[inline]
    fn idx(&self, player: usize, action: usize, vtype: usize) -> usize {
        (player * self.k + action) * self.u + vtype
    }

    pub fn rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn value(&self, round: usize, player: usize, action: usize, vtype: usize) -> f64 {
        self.rounds[round][self.idx(player, action, vtype)]
    }

    /// The per-round loss vectors for one (player, type) slice.
    pub fn slice(&self, player: usize, vtype: usize) -> Vec<Vec<f64>> {
        self.rounds
            .iter()
            .map(|r| {
                (0..self.k)
                    .map(|j| r[self.idx(player, j, vtype)])
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MedianStatus {
    Ok,
    /// The hard-query budget ran out; the round it happened in is recorded.
    Failure { round: usize },
}

/// A completed (or failed) candidate-net run.
#[derive(Debug, Clone)]
pub struct MedianRun {
    pub run: MechanismRun,
    pub status: MedianStatus,
    pub table: SharedLossTable,
    pub universe: usize,
    pub alpha_mm: f64,
    pub hard_cap: usize,
    pub hard_queries: usize,
    pub easy_queries: usize,
    /// Whether the true type tuple survived every pruning pass.
    pub true_tuple_live: bool,
    /// Worst |answer - true value| over all answered queries (rescaled
    /// loss units, same scale as `alpha_mm`).
    pub max_answer_error: f64,
}

/// The net over type tuples, stored implicitly by rank (player 0 most
/// significant, then type id: lexicographic).
struct CandidateNet {
    u: usize,
    live: Vec<bool>,
    live_count: usize,
}

impl CandidateNet {
    fn new(n: usize, u: usize) -> Result<Self> {
        let size = (u as f64).powi(n as i32);
        if size > NET_CAP {
            return Err(Error::resource(format!(
                "candidate net of {size:.3e} tuples exceeds cap {NET_CAP:.0e}"
            )));
        }
        let size = size as usize;
        Ok(Self {
            u,
            live: vec![true; size],
            live_count: size,
        })
    }

    fn rank_of(&self, types: &[usize]) -> usize {
        types.iter().fold(0, |acc, &t| acc * self.u + t)
    }

    fn prune(&mut self, rank: usize) {
        if self.live[rank] {
            self.live[rank] = false;
            self.live_count -= 1;
        }
    }
}

fn net_type_of(n: usize, u: usize, rank: usize, player: usize) -> usize {
    let shift = n - 1 - player;
    (rank / u.pow(shift as u32)) % u
}

/// Encode the candidate's types with one seat removed; memo key for query
/// values.
fn net_others_key(n: usize, u: usize, rank: usize, seat: usize) -> u64 {
    let mut key = 0u64;
    for player in 0..n {
        if player == seat {
            continue;
        }
        key = key * u as u64 + net_type_of(n, u, rank, player) as u64;
    }
    key
}

/// Memoized query evaluation: the value depends only on the hypothetical
/// type and the others' type assignment.
fn eval_query(
    game: &dyn Game,
    states: &[MixedStrategy],
    memo: &mut HashMap<(usize, u64), Vec<f64>>,
    seat: usize,
    vtype: usize,
    rank: usize,
) -> Result<Vec<f64>> {
    let n = game.player_count();
    let u = game.type_universe_size();
    let key = (vtype, net_others_key(n, u, rank, seat));
    if let Some(v) = memo.get(&key) {
        return Ok(v.clone());
    }
    let assignment: Vec<usize> = (0..n)
        .filter(|&p| p != seat)
        .map(|p| net_type_of(n, u, rank, p))
        .collect();
    let v = query_loss(game, states, &assignment, seat, vtype)?;
    memo.insert(key, v.clone());
    Ok(v)
}

/// The query underlying the mechanism: rescaled expected loss of action
/// `action` for a hypothetical `vtype` at `seat`, with every other player's
/// strategy taken from `states` (indexed `player * U + type`) according to
/// the supplied type assignment. Player `seat`'s own true type is never read.
pub(crate) fn query_loss(
    game: &dyn Game,
    states: &[MixedStrategy],
    assignment_of_others: &[usize],
    seat: usize,
    vtype: usize,
) -> Result<Vec<f64>> {
    let n = game.player_count();
    let u = game.type_universe_size();
    debug_assert_eq!(assignment_of_others.len(), n - 1);
    let others: Vec<MixedStrategy> = assignment_of_others
        .iter()
        .enumerate()
        .map(|(slot, &ty)| {
            let player = if slot < seat { slot } else { slot + 1 };
            states[player * u + ty].clone()
        })
        .collect();
    let mode = if game.is_aggregative() {
        LossMode::Anonymous
    } else {
        LossMode::Exact
    };
    let lv = expected_loss_as(game, seat, PlayerType(vtype as u32), &others, mode, None)?;
    Ok(lv.values.iter().map(|&l| (l + 1.0) / 3.0).collect())
}

/// Run the candidate-net mechanism.
pub fn run(game: &dyn Game, params: &MedianParams) -> Result<MedianRun> {
    let n = game.player_count();
    let k = game.action_count();
    let u = game.type_universe_size();
    let gamma = game.declared_sensitivity();
    let (eps, delta, beta) = (params.budget.epsilon, params.budget.delta, params.beta);
    let mut net = CandidateNet::new(n, u)?;
    let true_rank = net.rank_of(
        &(0..n)
            .map(|i| game.player_type(i).0 as usize)
            .collect::<Vec<_>>(),
    );

    let (t, round_source, constraint_satisfied) = match params.t_override {
        Some(t) if t >= 1 => {
            let ok = crate::privacy::median_constraint_margin(n, u, k, t, gamma, eps, delta, beta)
                <= 0.0;
            (t, RoundSource::Explicit, ok)
        }
        Some(_) => return Err(Error::contract("t override must be >= 1")),
        None => match plan_median_rounds(n, u, k, gamma, eps, delta, beta, params.t_cap)? {
            PlanOutcome::Feasible(plan) => (plan.t, RoundSource::Constraint, true),
            PlanOutcome::Infeasible { lhs, rhs } => {
                return Err(Error::Infeasible {
                    constraint: "16/eps gamma sqrt(n ln U) ln(2nkTU/beta) ln(4/delta) <= 1/6"
                        .into(),
                    lhs,
                    rhs,
                    t: 1,
                })
            }
        },
    };

    let alpha_mm = median_accuracy_bound(n, u, k, t, gamma, eps, delta, beta);
    let tau = alpha_mm / 2.0;
    // Hard-query budget and the even per-epoch split behind the threshold,
    // comparison, and hard-answer noise scales.
    let hard_cap = (20.0 * n as f64 * (u as f64).ln()).floor() as usize + 1;
    let s_thresh = 4.0 * gamma * hard_cap as f64 / eps;
    let s_comp = 8.0 * gamma * hard_cap as f64 / eps;
    let s_hard = 4.0 * gamma * hard_cap as f64 / eps;
    let exact_mode = u == 1;

    let mut rng = stream(params.seed, StreamKind::QueryMechanism, 0);
    let mut threshold_noise = if exact_mode {
        0.0
    } else {
        laplace_sample(s_thresh, &mut rng)
    };

    let mut learners: Vec<Learner> = (0..n * u)
        .map(|_| Learner::new(params.learner, k, t))
        .collect();
    let mut table = SharedLossTable::new(n, k, u);
    let mut true_rows: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n];
    let mut clamped: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut hard_queries = 0usize;
    let mut easy_queries = 0usize;
    let mut max_answer_error = 0.0_f64;
    let mut status = MedianStatus::Ok;

    'rounds: for round in 0..t as usize {
        let states: Vec<MixedStrategy> =
            learners.iter().map(|l| l.current().clone()).collect();
        let mut round_values = vec![0.0_f64; n * k * u];
        for i in 0..n {
            true_rows[i].push(vec![0.0; k]);
        }
        for seat in 0..n {
            // Query values depend on (hypothetical type, others' types);
            // memoize per seat across actions and candidates.
            let mut memo: HashMap<(usize, u64), Vec<f64>> = HashMap::new();
            for action in 0..k {
                for vtype in 0..u {
                    let true_value =
                        eval_query(game, &states, &mut memo, seat, vtype, true_rank)?[action];
                    if game.player_type(seat).0 as usize == vtype {
                        // Raw-scale record for certificates: undo rescaling.
                        true_rows[seat][round][action] = 3.0 * true_value - 1.0;
                    }
                    let answer = if exact_mode {
                        easy_queries += 1;
                        true_value
                    } else {
                        let mut live_eval: Vec<(usize, f64)> =
                            Vec::with_capacity(net.live_count);
                        for rank in 0..net.live.len() {
                            if net.live[rank] {
                                let v =
                                    eval_query(game, &states, &mut memo, seat, vtype, rank)?
                                        [action];
                                live_eval.push((rank, v));
                            }
                        }
                        if live_eval.is_empty() {
                            // Pruning emptied the net: the failure event.
                            status = MedianStatus::Failure { round };
                            break 'rounds;
                        }
                        let mut sorted: Vec<f64> =
                            live_eval.iter().map(|&(_, v)| v).collect();
                        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                        let median = sorted[sorted.len() / 2];
                        let distance = (median - true_value).abs();
                        let comparison = distance + laplace_sample(s_comp, &mut rng);
                        if comparison <= tau + threshold_noise {
                            easy_queries += 1;
                            max_answer_error = max_answer_error.max(distance);
                            median
                        } else {
                            hard_queries += 1;
                            if hard_queries > hard_cap {
                                status = MedianStatus::Failure { round };
                                break 'rounds;
                            }
                            threshold_noise = laplace_sample(s_thresh, &mut rng);
                            let noisy = true_value + laplace_sample(s_hard, &mut rng);
                            max_answer_error = max_answer_error.max((noisy - true_value).abs());
                            for (rank, v) in live_eval {
                                if (v - noisy).abs() > tau {
                                    net.prune(rank);
                                }
                            }
                            noisy
                        }
                    };
                    round_values[(seat * k + action) * u + vtype] = answer;
                }
            }
        }
        table.rounds.push(round_values);
        // Everyone advances on the shared table; clamp counts are tracked
        // for the slices players actually consume.
        let round_row = table.rounds.last().expect("just pushed");
        for seat in 0..n {
            let true_type = game.player_type(seat).0 as usize;
            for vtype in 0..u {
                let mut fed = Vec::with_capacity(k);
                let mut clamps = 0u32;
                for action in 0..k {
                    let raw = round_row[(seat * k + action) * u + vtype];
                    let c = raw.clamp(0.0, 1.0);
                    if c != raw {
                        clamps += 1;
                    }
                    fed.push(c);
                }
                learners[seat * u + vtype]
                    .step(&fed)
                    .map_err(|e| Error::numeric(format!("learner failed: {e}")))?;
                if vtype == true_type {
                    clamped[seat].push(clamps);
                }
            }
        }
    }

    let completed = table.rounds();
    for rows in true_rows.iter_mut() {
        rows.truncate(completed);
    }
    let sequences: Vec<PlaySequence> = (0..n)
        .map(|seat| {
            let true_type = game.player_type(seat).0 as usize;
            let seq = learners[seat * u + true_type].sequence();
            PlaySequence::new(seq.states()[..=completed.min(seq.len() - 1)].to_vec())
                .expect("non-empty")
        })
        .collect();
    let fed_losses: Vec<LossMatrix> = (0..n)
        .map(|seat| {
            let true_type = game.player_type(seat).0 as usize;
            let rows = table.slice(seat, true_type);
            if rows.is_empty() {
                LossMatrix::new(vec![vec![0.0; k]]).expect("placeholder")
            } else {
                LossMatrix::new(rows).expect("table slice well formed")
            }
        })
        .collect();
    let true_losses: Vec<LossMatrix> = true_rows
        .into_iter()
        .map(|rows| {
            if rows.is_empty() {
                LossMatrix::new(vec![vec![0.0; k]]).expect("placeholder")
            } else {
                LossMatrix::new(rows).expect("true losses well formed")
            }
        })
        .collect();

    let run = MechanismRun {
        n,
        k,
        t: completed as u64,
        sequences,
        true_losses,
        fed_losses,
        clamped,
        predicted_alpha: predicted_alpha_median(n, u, k, t, gamma, eps, delta, beta),
        round_source,
        constraint_satisfied,
        // The net mechanism's budget is a property of the mechanism family,
        // not recomposed per answer en route; the ledger records the
        // budget-consuming (hard) answers.
        ledger_draws: hard_queries as u64,
        composed_epsilon: eps,
        composed_delta: delta,
        sigma: 0.0,
        per_step_epsilon: 0.0,
        loss_mode: if game.is_aggregative() {
            "anonymous"
        } else {
            "exact"
        },
        seed: params.seed,
    };
    Ok(MedianRun {
        run,
        status,
        table,
        universe: u,
        alpha_mm,
        hard_cap,
        hard_queries,
        easy_queries,
        true_tuple_live: net.live[true_rank],
        max_answer_error,
    })
}
