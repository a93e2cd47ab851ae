//! The correlated action distribution induced by recorded play, sampling
//! from it, and equilibrium certificate verification.
//!
//! The distribution is kept as a mixture of product profiles — one product of
//! per-player mixed strategies per round — and never materialized over the
//! joint action space. Sampling picks a uniformly random round and then draws
//! each player independently; every expectation a certificate needs is
//! per-round and per-player, so verification is exact without exponential
//! blowup.

use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{
    default_loss_mode, expected_losses_all, ActionProfile, Game, LossMode,
};
use crate::noregret::{regret_from_table, DeviationFamily};
use crate::rng::Stream;
use crate::strategy::MixedStrategy;

/// Mixture-of-products representation of recorded play.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedDistribution {
    /// `rounds[t][i]` is player `i`'s mixed strategy in round `t`.
    rounds: Vec<Vec<MixedStrategy>>,
}

impl CorrelatedDistribution {
    pub fn from_rounds(rounds: Vec<Vec<MixedStrategy>>) -> Result<Self> {
        let t = rounds.len();
        if t == 0 {
            return Err(Error::contract("distribution needs at least one round"));
        }
        let n = rounds[0].len();
        if n == 0 || rounds.iter().any(|r| r.len() != n) {
            return Err(Error::contract("rounds disagree on player count"));
        }
        let k = rounds[0][0].k();
        if rounds.iter().flatten().any(|s| s.k() != k) {
            return Err(Error::contract("rounds disagree on action count"));
        }
        Ok(Self { rounds })
    }

    /// Per-player sequences (all the same length) into per-round profiles.
    pub fn from_sequences(sequences: &[Vec<MixedStrategy>]) -> Result<Self> {
        let t = sequences
            .first()
            .map(|s| s.len())
            .ok_or_else(|| Error::contract("no players"))?;
        if sequences.iter().any(|s| s.len() != t) {
            return Err(Error::contract("sequences disagree on round count"));
        }
        let rounds = (0..t)
            .map(|round| sequences.iter().map(|s| s[round].clone()).collect())
            .collect();
        Self::from_rounds(rounds)
    }

    pub fn rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn players(&self) -> usize {
        self.rounds[0].len()
    }

    pub fn k(&self) -> usize {
        self.rounds[0][0].k()
    }

    pub fn round(&self, t: usize) -> &[MixedStrategy] {
        &self.rounds[t]
    }

    pub fn all_rounds(&self) -> &[Vec<MixedStrategy>] {
        &self.rounds
    }

    /// Average probability that `player` plays `action`, exact from the
    /// stored mixture.
    pub fn marginal_prob(&self, player: usize, action: usize) -> f64 {
        let total: f64 = self
            .rounds
            .iter()
            .map(|r| r[player].prob(action))
            .sum();
        total / self.rounds.len() as f64
    }

    /// One draw: uniform round, then independent per-player draws.
    pub fn sample_profile<R: Rng>(&self, rng: &mut R) -> ActionProfile {
        let t = rng.gen_range(0..self.rounds.len());
        ActionProfile(
            self.rounds[t]
                .iter()
                .map(|s| s.sample(rng))
                .collect(),
        )
    }
}

/// Per-player measured regrets under the distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlayerRegret {
    pub fixed: f64,
    pub swap: f64,
}

/// The certificate: measured regrets and the implied approximation levels.
/// `alpha_cce` bounds gains from constant deviations (coarse correlated
/// equilibrium), `alpha_ce` from arbitrary action remappings (correlated
/// equilibrium); the latter always dominates.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumCertificate {
    pub per_player: Vec<PlayerRegret>,
    pub alpha_cce: f64,
    pub alpha_ce: f64,
    pub mode: String,
    pub stderr: Option<f64>,
}

/// How certificate expectations are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    /// Exact per-round expectations via the game's enumeration or count
    /// backend.
    Exact,
    /// Sampled profiles, with a standard error attached.
    MonteCarlo { samples: usize },
}

/// Verify a distribution against a game.
pub fn verify(
    dist: &CorrelatedDistribution,
    game: &dyn Game,
    mode: VerifyMode,
    rng: Option<&mut Stream>,
) -> Result<EquilibriumCertificate> {
    if dist.players() != game.player_count() {
        return Err(Error::contract("distribution/game player count mismatch"));
    }
    if dist.k() != game.action_count() {
        return Err(Error::contract("distribution/game action count mismatch"));
    }
    match mode {
        VerifyMode::Exact => verify_exact(dist, game),
        VerifyMode::MonteCarlo { samples } => {
            let rng =
                rng.ok_or_else(|| Error::contract("monte_carlo verify needs an rng stream"))?;
            verify_monte_carlo(dist, game, samples, rng)
        }
    }
}

/// Shared core: per-player tables `c[j][m] = (1/T) sum_t pi_t[j] * u_t[m]`
/// where `u_t[m]` is the expected utility of committing to action `m` in
/// round `t`. Regrets read straight off the table; utilities are `1 - loss`,
/// so the table is the utility-side mirror of the weighted-loss table the
/// learner module maximizes over, and the two agree identically.
fn certificate_from_tables(
    tables: Vec<Vec<Vec<f64>>>,
    mode: String,
    stderr: Option<f64>,
) -> EquilibriumCertificate {
    let per_player: Vec<PlayerRegret> = tables
        .iter()
        .map(|table| {
            // Regret = deviation gain in utility terms: negate to reuse the
            // loss-side maximizers.
            let k = table.len();
            let loss_table: Vec<Vec<f64>> = table
                .iter()
                .map(|row| row.iter().map(|&u| -u).collect())
                .collect();
            let _ = k;
            let (fixed, _) = regret_from_table(&loss_table, DeviationFamily::Fixed);
            let (swap, _) = regret_from_table(&loss_table, DeviationFamily::Swap);
            PlayerRegret { fixed, swap }
        })
        .collect();
    let alpha_cce = per_player
        .iter()
        .map(|r| r.fixed)
        .fold(f64::NEG_INFINITY, f64::max);
    let alpha_ce = per_player
        .iter()
        .map(|r| r.swap)
        .fold(f64::NEG_INFINITY, f64::max);
    EquilibriumCertificate {
        per_player,
        alpha_cce,
        alpha_ce,
        mode,
        stderr,
    }
}

/// Per-player conditional utility tables under the distribution:
/// `tables[i][j][m] = (1/T) sum_t pi_{i,t}[j] * E[u_i(m, a_others)]`, the
/// joint mass of "recommended j" against "expected payoff of committing to
/// m". Follow-utility, best fixed deviation, and the per-recommendation
/// optimal swap all read off this table.
pub fn utility_tables(
    dist: &CorrelatedDistribution,
    game: &dyn Game,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let n = dist.players();
    let k = dist.k();
    let t = dist.rounds();
    let mode = match default_loss_mode(game) {
        LossMode::MonteCarlo { .. } => {
            return Err(Error::resource(
                "exact verification infeasible: no exact backend fits this game's size",
            ))
        }
        exact => exact,
    };
    let mut tables = vec![vec![vec![0.0_f64; k]; k]; n];
    for round in 0..t {
        let losses = expected_losses_all(game, dist.round(round), mode, None)?;
        for (i, lv) in losses.iter().enumerate() {
            let state = &dist.round(round)[i];
            for j in 0..k {
                let p = state.prob(j);
                if p == 0.0 {
                    continue;
                }
                for m in 0..k {
                    tables[i][j][m] += p * (1.0 - lv.values[m]);
                }
            }
        }
    }
    let inv_t = 1.0 / t as f64;
    for table in tables.iter_mut() {
        for row in table.iter_mut() {
            for v in row.iter_mut() {
                *v *= inv_t;
            }
        }
    }
    Ok(tables)
}

/// Expected utility of opting in and following recommendations.
pub fn follow_utility(table: &[Vec<f64>]) -> f64 {
    (0..table.len()).map(|j| table[j][j]).sum()
}

/// Gain of the per-recommendation optimal swap deviation over following.
pub fn best_swap_gain(table: &[Vec<f64>]) -> f64 {
    table
        .iter()
        .enumerate()
        .map(|(j, row)| row.iter().copied().fold(f64::NEG_INFINITY, f64::max) - row[j])
        .sum()
}

fn verify_exact(dist: &CorrelatedDistribution, game: &dyn Game) -> Result<EquilibriumCertificate> {
    let mode = default_loss_mode(game);
    let tables = utility_tables(dist, game)?;
    Ok(certificate_from_tables(tables, mode.label().into(), None))
}

fn verify_monte_carlo(
    dist: &CorrelatedDistribution,
    game: &dyn Game,
    samples: usize,
    rng: &mut Stream,
) -> Result<EquilibriumCertificate> {
    if samples == 0 {
        return Err(Error::contract("monte_carlo verify needs samples >= 1"));
    }
    let n = dist.players();
    let k = dist.k();
    let mut tables = vec![vec![vec![0.0_f64; k]; k]; n];
    // Per-player accumulators for the follow-vs-best-fixed gap variance.
    let mut follow_sum = vec![0.0_f64; n];
    let mut dev_sum = vec![vec![0.0_f64; k]; n];
    let mut dev_sq = vec![vec![0.0_f64; k]; n];
    let mut others = vec![0usize; n - 1];
    for _ in 0..samples {
        let profile = dist.sample_profile(rng);
        for i in 0..n {
            for (slot, &a) in others
                .iter_mut()
                .zip(profile.0.iter().enumerate().filter(|(p, _)| *p != i).map(|(_, a)| a))
            {
                *slot = a;
            }
            let played = profile.0[i];
            for m in 0..k {
                let u = game.utility(i, m, &others);
                tables[i][played][m] += u;
                let gap = u - if m == played { u } else { game.utility(i, played, &others) };
                dev_sum[i][m] += gap;
                dev_sq[i][m] += gap * gap;
            }
            follow_sum[i] += game.utility(i, played, &others);
        }
    }
    let inv = 1.0 / samples as f64;
    for table in tables.iter_mut() {
        for row in table.iter_mut() {
            for v in row.iter_mut() {
                *v *= inv;
            }
        }
    }
    // Standard error of the best fixed-deviation gap, maximized over players.
    let mut worst_stderr = 0.0_f64;
    for i in 0..n {
        let best = (0..k)
            .max_by(|&a, &b| dev_sum[i][a].partial_cmp(&dev_sum[i][b]).unwrap())
            .unwrap();
        let mean = dev_sum[i][best] * inv;
        let var = (dev_sq[i][best] * inv - mean * mean).max(0.0);
        worst_stderr = worst_stderr.max((var * inv).sqrt());
    }
    Ok(certificate_from_tables(
        tables,
        "monte_carlo".into(),
        Some(worst_stderr),
    ))
}
