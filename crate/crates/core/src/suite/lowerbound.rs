//! Reduction from private subset-sum query release to private equilibrium
//! computation, plus the interval-halving decoder that reads answers back
//! out of an approximate equilibrium.
//!
//! Given a bit database of size `n` and `m` subset-sum queries, the game has
//! `n` data players whose dominant action replays their bit and, per query,
//! `ceil(log2 n)` query players whose payoffs are the two sawtooth families
//! evaluated at the realized query value. In any good-enough equilibrium each
//! query player's majority action reveals which parity region the true answer
//! sits in at its level; intersecting those regions pins the answer down to
//! a width-`36 alpha` interval.

use serde::{Deserialize, Serialize};

use crate::equilibrium::CorrelatedDistribution;
use crate::error::{Error, Result};
use crate::game::{Game, PlayerType};
use crate::strategy::MixedStrategy;

use super::sawtooth::{parity_intervals, sawtooth_even, sawtooth_odd, Parity};

/// A bit database together with subset-sum queries over it (0-based
/// internally; the file format is 1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetSumInstance {
    database: Vec<u8>,
    queries: Vec<Vec<usize>>,
}

impl SubsetSumInstance {
    pub fn new(database: Vec<u8>, queries: Vec<Vec<usize>>) -> Result<Self> {
        let n = database.len();
        if n < 2 {
            return Err(Error::contract("database needs at least 2 bits"));
        }
        if database.iter().any(|&b| b > 1) {
            return Err(Error::contract("database entries must be bits"));
        }
        let mut cleaned = Vec::with_capacity(queries.len());
        for (j, q) in queries.into_iter().enumerate() {
            if q.is_empty() {
                return Err(Error::contract(format!("query {j} is empty")));
            }
            if q.iter().any(|&i| i >= n) {
                return Err(Error::contract(format!("query {j} indexes out of range")));
            }
            let mut q = q;
            q.sort_unstable();
            q.dedup();
            cleaned.push(q);
        }
        Ok(Self {
            database,
            queries: cleaned,
        })
    }

    pub fn database(&self) -> &[u8] {
        &self.database
    }

    pub fn data_size(&self) -> usize {
        self.database.len()
    }

    pub fn query_count(&self) -> usize {
        self.queries.len()
    }

    pub fn query(&self, j: usize) -> &[usize] {
        &self.queries[j]
    }

    /// `q_j` evaluated on arbitrary bits: the fraction of the *whole*
    /// database (denominator `n`) covered by the query and set to one.
    pub fn query_value_on(&self, j: usize, bits: &[usize]) -> f64 {
        let hits: usize = self.queries[j].iter().map(|&i| bits[i] & 1).sum();
        hits as f64 / self.database.len() as f64
    }

    /// `q_j(D)` on the stored database.
    pub fn true_answer(&self, j: usize) -> f64 {
        let hits: usize = self.queries[j].iter().map(|&i| self.database[i] as usize).sum();
        hits as f64 / self.database.len() as f64
    }
}

/// File form: bits plus 1-indexed queries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsetSumFile {
    pub database: Vec<u8>,
    pub queries: Vec<Vec<usize>>,
}

impl SubsetSumFile {
    pub fn into_instance(self) -> Result<SubsetSumInstance> {
        let queries = self
            .queries
            .into_iter()
            .enumerate()
            .map(|(j, q)| {
                q.into_iter()
                    .map(|i| {
                        if i == 0 {
                            Err(Error::format(format!(
                                "query {} uses index 0; file indices are 1-based",
                                j + 1
                            )))
                        } else {
                            Ok(i - 1)
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        SubsetSumInstance::new(self.database, queries)
    }

    pub fn from_instance(inst: &SubsetSumInstance) -> Self {
        Self {
            database: inst.database.clone(),
            queries: inst
                .queries
                .iter()
                .map(|q| q.iter().map(|&i| i + 1).collect())
                .collect(),
        }
    }
}

/// Number of query players per query: one per halving level.
pub fn levels_for(n: usize) -> u32 {
    (usize::BITS - (n - 1).leading_zeros()).max(1)
}

/// The reduction game: `n` data players then `m * levels` query players in
/// `(query, level)` lexicographic order, two actions each.
#[derive(Debug, Clone)]
pub struct LowerBoundGame {
    instance: SubsetSumInstance,
    levels: u32,
}

impl LowerBoundGame {
    pub fn new(instance: SubsetSumInstance) -> Result<Self> {
        if instance.query_count() == 0 {
            return Err(Error::contract("reduction needs at least one query"));
        }
        let levels = levels_for(instance.data_size());
        Ok(Self { instance, levels })
    }

    pub fn instance(&self) -> &SubsetSumInstance {
        &self.instance
    }

    pub fn data_players(&self) -> usize {
        self.instance.data_size()
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn query_player(&self, query: usize, level: u32) -> usize {
        debug_assert!(level >= 1 && level <= self.levels);
        self.data_players() + query * self.levels as usize + (level - 1) as usize
    }

    fn query_of_type(&self, ptype: PlayerType) -> Option<(usize, u32)> {
        let id = ptype.0 as usize;
        if id < 2 {
            return None;
        }
        let slot = id - 2;
        Some((slot / self.levels as usize, (slot % self.levels as usize) as u32 + 1))
    }
}

impl Game for LowerBoundGame {
    fn player_count(&self) -> usize {
        self.data_players() + self.instance.query_count() * self.levels as usize
    }

    fn action_count(&self) -> usize {
        2
    }

    fn declared_sensitivity(&self) -> f64 {
        1.0 / self.data_players() as f64
    }

    fn player_type(&self, player: usize) -> PlayerType {
        let n = self.data_players();
        if player < n {
            PlayerType(u32::from(self.instance.database[player]))
        } else {
            PlayerType(2 + (player - n) as u32)
        }
    }

    fn type_universe_size(&self) -> usize {
        2 + self.instance.query_count() * self.levels as usize
    }

    fn type_name(&self, ptype: PlayerType) -> String {
        match self.query_of_type(ptype) {
            None => format!("bit-{}", ptype.0),
            Some((j, h)) => format!("query-{j}-level-{h}"),
        }
    }

    fn utility_as(&self, seat: usize, ptype: PlayerType, own: usize, others: &[usize]) -> f64 {
        match self.query_of_type(ptype) {
            // Data types: match your bit.
            None => {
                if own == ptype.0 as usize {
                    1.0
                } else {
                    0.0
                }
            }
            Some((j, level)) => {
                // Query players sit above every data player, so the data
                // block is unshifted in `others`.
                debug_assert!(seat >= self.data_players());
                let x = self.instance.query_value_on(j, &others[..self.data_players()]);
                if own == 0 {
                    sawtooth_even(level, x)
                } else {
                    sawtooth_odd(level, x)
                }
            }
        }
    }
}

/// The exact-equilibrium play the pipeline can plant instead of running a
/// mechanism: data players replay their bits; each query player plays its
/// level's best response to the true answer, mixing only on exact ties.
pub fn planted_distribution(game: &LowerBoundGame) -> CorrelatedDistribution {
    let mut strategies = Vec::with_capacity(game.player_count());
    for i in 0..game.data_players() {
        strategies.push(MixedStrategy::point_mass(
            2,
            game.instance.database[i] as usize,
        ));
    }
    for j in 0..game.instance.query_count() {
        let x = game.instance.true_answer(j);
        for level in 1..=game.levels {
            let even = sawtooth_even(level, x);
            let odd = sawtooth_odd(level, x);
            strategies.push(if even > odd {
                MixedStrategy::point_mass(2, 0)
            } else if odd > even {
                MixedStrategy::point_mass(2, 1)
            } else {
                MixedStrategy::uniform(2)
            });
        }
    }
    CorrelatedDistribution::from_rounds(vec![strategies]).expect("valid planted profile")
}

/// One decoded query answer.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedAnswer {
    pub answer: f64,
    pub halfwidth: f64,
    pub levels_used: u32,
}

/// Decode every query from the empirical action frequencies of its players.
///
/// Per level: a two-thirds majority narrows the candidate interval to that
/// parity's margin-shrunk region; no majority stops at the boundary region;
/// and decoding always stops once cells are thinner than `18 alpha`. Errors
/// are per query so one bad query cannot poison the rest.
pub fn decode_answers(
    game: &LowerBoundGame,
    dist: &CorrelatedDistribution,
    alpha: f64,
) -> Vec<Result<DecodedAnswer>> {
    assert!(alpha > 0.0, "alpha must be positive");
    let margin = 9.0 * alpha;
    (0..game.instance.query_count())
        .map(|j| decode_query(game, dist, j, margin))
        .collect()
}

fn decode_query(
    game: &LowerBoundGame,
    dist: &CorrelatedDistribution,
    query: usize,
    margin: f64,
) -> Result<DecodedAnswer> {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut levels_used = 0u32;
    for level in 1..=game.levels {
        // 2^-level < 18 alpha = 2 * margin: cells too thin to separate.
        if (2.0_f64).powi(-(level as i32)) < 2.0 * margin {
            break;
        }
        let player = game.query_player(query, level);
        let freq_even = dist.marginal_prob(player, 0);
        let majority = freq_even.max(1.0 - freq_even);
        let narrowed = if majority >= 2.0 / 3.0 {
            let parity = if freq_even >= 0.5 {
                Parity::Even
            } else {
                Parity::Odd
            };
            intersect_best(lo, hi, &parity_intervals(level, margin, parity))
        } else {
            // No useful majority: the answer hugs a cell boundary here.
            let hit = intersect_best(lo, hi, &parity_intervals(level, margin, Parity::Boundary));
            match hit {
                Some((a, b)) => {
                    levels_used = level;
                    return Ok(finish(a, b, levels_used));
                }
                None => None,
            }
        };
        match narrowed {
            Some((a, b)) => {
                lo = a;
                hi = b;
                levels_used = level;
            }
            None => {
                return Err(Error::Decode {
                    query,
                    level,
                    reason: format!(
                        "region intersection with [{lo:.6}, {hi:.6}] is empty"
                    ),
                })
            }
        }
    }
    Ok(finish(lo, hi, levels_used))
}

fn intersect_best(lo: f64, hi: f64, intervals: &[(f64, f64)]) -> Option<(f64, f64)> {
    // The candidate interval descends from one cell, so at most one component
    // genuinely overlaps; picking the widest overlap settles degenerate ties.
    let mut best: Option<(f64, f64)> = None;
    for &(a, b) in intervals {
        let l = lo.max(a);
        let h = hi.min(b);
        if l <= h {
            let wider = match best {
                Some((bl, bh)) => (h - l) > (bh - bl),
                None => true,
            };
            if wider {
                best = Some((l, h));
            }
        }
    }
    best
}

fn finish(lo: f64, hi: f64, levels_used: u32) -> DecodedAnswer {
    DecodedAnswer {
        answer: 0.5 * (lo + hi),
        halfwidth: 0.5 * (hi - lo),
        levels_used,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::check_sensitivity;
    use crate::rng::{stream, StreamKind};

    fn small_instance() -> SubsetSumInstance {
        SubsetSumInstance::new(vec![1, 0, 1, 1], vec![vec![0, 2]]).unwrap()
    }

    #[test]
    fn query_value_matches_hand_evaluation() {
        // D = (1,0,1,1), q = {1,3} 1-based: both bits set, value 2/4.
        let inst = small_instance();
        assert_eq!(inst.true_answer(0), 0.5);
        let file = SubsetSumFile {
            database: vec![1, 0, 1, 1],
            queries: vec![vec![1, 3]],
        };
        assert_eq!(file.into_instance().unwrap(), inst);
    }

    #[test]
    fn data_player_utility_is_bit_indicator() {
        let game = LowerBoundGame::new(small_instance()).unwrap();
        let others = vec![0usize; game.player_count() - 1];
        assert_eq!(game.utility(0, 1, &others), 1.0);
        assert_eq!(game.utility(0, 0, &others), 0.0);
    }

    #[test]
    fn empty_queries_are_rejected() {
        assert!(SubsetSumInstance::new(vec![1, 0], vec![vec![]]).is_err());
        assert!(LowerBoundGame::new(
            SubsetSumInstance::new(vec![1, 0], vec![]).unwrap()
        )
        .is_err());
    }

    #[test]
    fn level_count_is_log2_ceiling() {
        assert_eq!(levels_for(2), 1);
        assert_eq!(levels_for(4), 2);
        assert_eq!(levels_for(5), 3);
        assert_eq!(levels_for(32), 5);
    }

    #[test]
    fn observed_sensitivity_within_one_over_n() {
        let inst = SubsetSumInstance::new(
            vec![1, 0, 1, 1, 0, 0, 1, 0],
            vec![vec![0, 1, 2, 3], vec![2, 4, 6]],
        )
        .unwrap();
        let game = LowerBoundGame::new(inst).unwrap();
        let mut rng = stream(50, StreamKind::Aux, 90);
        let report = check_sensitivity(&game, 100_000, &mut rng);
        assert!(
            report.within_declared(),
            "observed {} > 1/n = {} ({:?})",
            report.max_observed,
            report.declared,
            report.witness
        );
    }

    #[test]
    fn planted_decode_recovers_every_answer_within_36_alpha() {
        // n = 32, m = 4, alpha = 0.001: planted equilibrium decodes to the
        // brute-force query values within 36 alpha.
        let mut rng = stream(51, StreamKind::Aux, 91);
        let n = 32usize;
        let database: Vec<u8> = (0..n).map(|_| rand::Rng::gen_range(&mut rng, 0..2u8)).collect();
        let queries: Vec<Vec<usize>> = (0..4)
            .map(|_| {
                let len = rand::Rng::gen_range(&mut rng, 1..=n);
                let mut q: Vec<usize> =
                    (0..len).map(|_| rand::Rng::gen_range(&mut rng, 0..n)).collect();
                q.sort_unstable();
                q.dedup();
                q
            })
            .collect();
        let inst = SubsetSumInstance::new(database, queries).unwrap();
        let game = LowerBoundGame::new(inst).unwrap();
        let dist = planted_distribution(&game);
        let alpha = 0.001;
        for (j, decoded) in decode_answers(&game, &dist, alpha).into_iter().enumerate() {
            let decoded = decoded.unwrap();
            let truth = game.instance().true_answer(j);
            assert!(
                (decoded.answer - truth).abs() <= 36.0 * alpha,
                "query {j}: decoded {} vs true {truth}",
                decoded.answer
            );
            assert!(decoded.halfwidth <= 18.0 * alpha);
        }
    }

    #[test]
    fn all_zero_database_decodes_to_zero() {
        let inst = SubsetSumInstance::new(vec![0; 16], vec![(0..16).collect()]).unwrap();
        let game = LowerBoundGame::new(inst).unwrap();
        let dist = planted_distribution(&game);
        let alpha = 0.001;
        let decoded = decode_answers(&game, &dist, alpha)
            .pop()
            .unwrap()
            .unwrap();
        assert!(decoded.answer.abs() <= 36.0 * alpha);
    }

    #[test]
    fn split_frequencies_stop_at_the_boundary_region() {
        // A query player torn 50/50 at level 1 stops decoding immediately
        // with a small interval around the central boundary.
        let inst = SubsetSumInstance::new(vec![1, 0, 1, 1], vec![vec![0, 2]]).unwrap();
        let game = LowerBoundGame::new(inst).unwrap();
        // q(D) = 0.5 exactly: every level is an exact tie, so the planted
        // play is uniform at level 1 and the decoder stops there.
        let dist = planted_distribution(&game);
        let alpha = 0.002;
        let decoded = decode_answers(&game, &dist, alpha)
            .pop()
            .unwrap()
            .unwrap();
        assert_eq!(decoded.levels_used, 1);
        assert!((decoded.answer - 0.5).abs() <= 9.0 * alpha);
        assert!(decoded.halfwidth <= 18.0 * alpha);
        assert!(2.0 * decoded.halfwidth <= 36.0 * alpha);
    }

    #[test]
    fn perturbed_planted_equilibria_still_decode_within_36_alpha() {
        // Mix every planted point mass with a sliver of uniform play. Each
        // player's regret grows by at most the mixing weight (utilities are
        // bounded by 1), so weight 2*alpha/3 keeps regrets at alpha-level
        // while majorities stay overwhelming; the decode guarantee must hold.
        let mut rng = stream(52, StreamKind::Aux, 92);
        let n = 32usize;
        let alpha = 0.001;
        let mix = 2.0 * alpha / 3.0;
        for _ in 0..5 {
            let database: Vec<u8> =
                (0..n).map(|_| rand::Rng::gen_range(&mut rng, 0..2u8)).collect();
            let queries: Vec<Vec<usize>> = (0..3)
                .map(|_| {
                    let len = rand::Rng::gen_range(&mut rng, 1..=n);
                    let mut q: Vec<usize> =
                        (0..len).map(|_| rand::Rng::gen_range(&mut rng, 0..n)).collect();
                    q.sort_unstable();
                    q.dedup();
                    q
                })
                .collect();
            let inst = SubsetSumInstance::new(database, queries).unwrap();
            let game = LowerBoundGame::new(inst).unwrap();
            let planted = planted_distribution(&game);
            let perturbed: Vec<Vec<MixedStrategy>> = planted
                .all_rounds()
                .iter()
                .map(|round| {
                    round
                        .iter()
                        .map(|s| {
                            let probs: Vec<f64> = (0..2)
                                .map(|j| (1.0 - mix) * s.prob(j) + mix * 0.5)
                                .collect();
                            MixedStrategy::new(probs).unwrap()
                        })
                        .collect()
                })
                .collect();
            let dist = CorrelatedDistribution::from_rounds(perturbed).unwrap();
            for (j, decoded) in decode_answers(&game, &dist, alpha).into_iter().enumerate() {
                let decoded = decoded.unwrap();
                let truth = game.instance().true_answer(j);
                assert!(
                    (decoded.answer - truth).abs() <= 36.0 * alpha,
                    "query {j}: decoded {} vs true {truth}",
                    decoded.answer
                );
            }
        }
    }

    #[test]
    fn planted_decode_sweeps_every_dyadic_answer() {
        // Exercise boundary answers (multiples of cell widths) specifically:
        // ties plant uniform play and must still decode within 36 alpha.
        let n = 16usize;
        for ones in 0..=n {
            let mut database = vec![0u8; n];
            for bit in database.iter_mut().take(ones) {
                *bit = 1;
            }
            let inst = SubsetSumInstance::new(database, vec![(0..n).collect()]).unwrap();
            let game = LowerBoundGame::new(inst).unwrap();
            let dist = planted_distribution(&game);
            let alpha = 0.002;
            let decoded = decode_answers(&game, &dist, alpha)
                .pop()
                .unwrap()
                .unwrap();
            let truth = ones as f64 / n as f64;
            assert!(
                (decoded.answer - truth).abs() <= 36.0 * alpha,
                "answer {truth}: decoded {}",
                decoded.answer
            );
        }
    }
}
