//! Monte Carlo incentive audit for recommender mechanisms.
//!
//! The proxy game gives each player two moves: opt in (submit your type,
//! receive a recommendation, apply any remapping to it) or opt out (submit
//! nothing and play a fixed action). When the proxy computes an approximate
//! correlated equilibrium under joint differential privacy, opting in and
//! following is an approximate Bayes-Nash equilibrium with slack
//! `eta = epsilon + delta + alpha`. The auditor estimates the best gain of
//! both deviation classes empirically, against a prior over types:
//!
//! - the *swap* branch reuses the truthful run and applies the
//!   per-recommendation optimal remapping (exact within the Monte Carlo);
//! - the *opt-out* branch re-runs the mechanism on the reduced game with the
//!   focal entry removed, keeping all surviving players' noise draws, and
//!   lets the focal player take the best fixed action.
//!
//! A naive majority-rule recommender is included as the contrast case: it
//! selects equilibria from reported types directly and a pivotal player
//! gains a constant by opting out, which is exactly what the private
//! mechanisms avoid.

use rand::Rng;

use crate::equilibrium::{
    best_swap_gain, follow_utility, utility_tables, CorrelatedDistribution,
};
use crate::error::{Error, Result};
use crate::game::{expected_loss, Game, LossMode, PlayerType};
use crate::mech::{laplace, median, LearnerKind};
use crate::privacy::PrivacyBudget;
use crate::rng::{derive_seed, stream, Stream, StreamKind};
use crate::strategy::MixedStrategy;
use crate::suite::beach::{BEACH_ACTION, BEACH_TYPE, MOUNTAIN_ACTION, MOUNTAIN_TYPE};

/// Prior over type tuples, with a focal-player convention per trial.
#[derive(Debug, Clone)]
pub struct TypePrior {
    kind: PriorKind,
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PriorKind {
    /// I.i.d. beach types with the given probability.
    BernoulliBeach(f64),
    /// Exactly ceil(n/2) mountain types in random positions; the focal
    /// player is a mountain type (the pivotal side).
    Critical,
}

impl TypePrior {
    pub fn bernoulli_beach(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::contract("bernoulli parameter must be in [0,1]"));
        }
        Ok(Self {
            kind: PriorKind::BernoulliBeach(p),
            description: format!("bernoulli:{p}"),
        })
    }

    pub fn critical() -> Self {
        Self {
            kind: PriorKind::Critical,
            description: "critical".into(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s == "critical" {
            return Ok(Self::critical());
        }
        if let Some(p) = s.strip_prefix("bernoulli:") {
            let p: f64 = p
                .parse()
                .map_err(|_| Error::format(format!("bad prior {s:?}")))?;
            return Self::bernoulli_beach(p);
        }
        Err(Error::format(format!("unknown prior {s:?}")))
    }

    /// Draw a type tuple and the focal player for one trial.
    pub fn sample(&self, n: usize, rng: &mut Stream) -> (Vec<PlayerType>, usize) {
        match self.kind {
            PriorKind::BernoulliBeach(p) => {
                let types = (0..n)
                    .map(|_| {
                        if rng.gen::<f64>() < p {
                            BEACH_TYPE
                        } else {
                            MOUNTAIN_TYPE
                        }
                    })
                    .collect();
                (types, rng.gen_range(0..n))
            }
            PriorKind::Critical => {
                let mountains = n.div_ceil(2);
                let mut types = vec![BEACH_TYPE; n];
                // Random positions for the mountain majority.
                let mut order: Vec<usize> = (0..n).collect();
                for i in (1..n).rev() {
                    let j = rng.gen_range(0..=i);
                    order.swap(i, j);
                }
                for &pos in order.iter().take(mountains) {
                    types[pos] = MOUNTAIN_TYPE;
                }
                let focal = order[rng.gen_range(0..mountains)];
                (types, focal)
            }
        }
    }
}

/// Which recommender the audit exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditMechanism {
    Laplace,
    Median,
    /// Always recommends the all-beach profile: an exact correlated
    /// equilibrium of the beach/mountain game for every type realization,
    /// computed with no use of the reports at all (epsilon = delta = 0).
    ExactOracle,
    /// The counterexample: sends everyone to the minority side of the
    /// reported type split. Not private, not truthful.
    NaiveMajority,
}

impl AuditMechanism {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "laplace" => Ok(Self::Laplace),
            "median" => Ok(Self::Median),
            "oracle" => Ok(Self::ExactOracle),
            "naive" => Ok(Self::NaiveMajority),
            other => Err(Error::format(format!("unknown mechanism {other:?}"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Laplace => "laplace",
            Self::Median => "median",
            Self::ExactOracle => "oracle",
            Self::NaiveMajority => "naive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AuditParams {
    pub mechanism: AuditMechanism,
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
    pub learner: LearnerKind,
    pub trials: usize,
    pub seed: u64,
    pub t_override: Option<u64>,
}

/// Mean and standard error of a per-trial gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainStat {
    pub mean: f64,
    pub stderr: f64,
}

fn gain_stat(samples: &[f64]) -> GainStat {
    let m = samples.len().max(1) as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / m;
    GainStat {
        mean,
        stderr: (var / m).sqrt(),
    }
}

/// The audit verdict.
#[derive(Debug, Clone)]
pub struct AuditReport {
    pub mechanism: AuditMechanism,
    pub trials_used: usize,
    pub discarded: usize,
    pub measured_alpha_mean: f64,
    /// `epsilon + delta + measured alpha` (zero epsilon/delta for the oracle
    /// and the naive rule, which add no noise).
    pub eta_claimed: f64,
    pub swap_gain: GainStat,
    pub optout_gain: GainStat,
    pub max_deviation_gain: f64,
    /// Standard error of whichever branch attains the max.
    pub stderr: f64,
}

impl AuditReport {
    /// The bound the audit enforces: no deviation may beat opting in
    /// and following by more than eta plus Monte Carlo noise.
    pub fn passes(&self) -> bool {
        self.max_deviation_gain <= self.eta_claimed + 3.0 * self.stderr
    }
}

struct TrialRun {
    alpha_ce: f64,
    tables: Vec<Vec<Vec<f64>>>,
}

fn mechanism_distribution(
    mechanism: AuditMechanism,
    game: &dyn Game,
    params: &AuditParams,
    seed: u64,
    stream_ids: Option<Vec<u64>>,
) -> Result<Option<CorrelatedDistribution>> {
    match mechanism {
        AuditMechanism::Laplace => {
            let budget = PrivacyBudget::joint(params.epsilon, params.delta)?;
            let mut lp = laplace::LaplaceParams::new(budget, params.beta, params.learner, seed);
            lp.t_override = params.t_override;
            lp.stream_ids = stream_ids;
            Ok(Some(laplace::run(game, &lp)?.distribution()))
        }
        AuditMechanism::Median => {
            let budget = PrivacyBudget::joint(params.epsilon, params.delta)?;
            let mut mp = median::MedianParams::new(budget, params.beta, params.learner, seed);
            mp.t_override = params.t_override;
            let out = median::run(game, &mp)?;
            match out.status {
                median::MedianStatus::Ok => Ok(Some(out.run.distribution())),
                median::MedianStatus::Failure { .. } => Ok(None),
            }
        }
        AuditMechanism::ExactOracle => {
            let profile =
                vec![MixedStrategy::point_mass(game.action_count(), BEACH_ACTION); game.player_count()];
            Ok(Some(CorrelatedDistribution::from_rounds(vec![profile])?))
        }
        AuditMechanism::NaiveMajority => Ok(Some(naive_majority_distribution(game))),
    }
}

/// The footnote rule: if the reported beach types are fewer than half the
/// reporting population, send everyone to the beach; otherwise to the
/// mountain.
fn naive_majority_distribution(game: &dyn Game) -> CorrelatedDistribution {
    let n = game.player_count();
    let beach_types = (0..n)
        .filter(|&i| game.player_type(i) == BEACH_TYPE)
        .count();
    let action = if 2 * beach_types < n {
        BEACH_ACTION
    } else {
        MOUNTAIN_ACTION
    };
    let profile = vec![MixedStrategy::point_mass(game.action_count(), action); n];
    CorrelatedDistribution::from_rounds(vec![profile]).expect("valid")
}

fn truthful_run(
    mechanism: AuditMechanism,
    game: &dyn Game,
    params: &AuditParams,
    seed: u64,
) -> Result<Option<TrialRun>> {
    let dist = match mechanism_distribution(mechanism, game, params, seed, None)? {
        Some(d) => d,
        None => return Ok(None),
    };
    let tables = utility_tables(&dist, game)?;
    let alpha_ce = tables
        .iter()
        .map(|t| best_swap_gain(t))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Some(TrialRun { alpha_ce, tables }))
}

/// Focal player's best fixed-action utility in the full game when everyone
/// else plays the reduced-run recommendations.
fn best_optout_utility(
    game: &dyn Game,
    focal: usize,
    reduced_dist: &CorrelatedDistribution,
) -> Result<f64> {
    let k = game.action_count();
    let t = reduced_dist.rounds();
    let mut utility = vec![0.0_f64; k];
    for round in 0..t {
        let others: Vec<MixedStrategy> = reduced_dist.round(round).to_vec();
        let lv = expected_loss(game, focal, &others, exactish_mode(game), None)?;
        for a in 0..k {
            utility[a] += 1.0 - lv.values[a];
        }
    }
    Ok(utility
        .iter()
        .map(|u| u / t as f64)
        .fold(f64::NEG_INFINITY, f64::max))
}

fn exactish_mode(game: &dyn Game) -> LossMode {
    if game.is_aggregative() {
        LossMode::Anonymous
    } else {
        LossMode::Exact
    }
}

/// Run the audit: per trial, draw types and a focal player, run the truthful
/// branch, apply the best post-hoc swap, and re-run with the focal player
/// opted out playing its best fixed action. Failed mechanism trials are
/// discarded and counted.
pub fn audit(template: &dyn Game, prior: &TypePrior, params: &AuditParams) -> Result<AuditReport> {
    if params.trials == 0 {
        return Err(Error::contract("audit needs trials >= 1"));
    }
    let n = template.player_count();
    let mut swap_gains = Vec::with_capacity(params.trials);
    let mut optout_gains = Vec::with_capacity(params.trials);
    let mut alphas = Vec::with_capacity(params.trials);
    let mut discarded = 0usize;
    let mut prior_rng = stream(params.seed, StreamKind::Trial, 0);
    for trial in 0..params.trials {
        let (types, focal) = prior.sample(n, &mut prior_rng);
        let game = template.with_types(&types)?;
        let trial_seed = derive_seed(params.seed, StreamKind::Trial, 1 + trial as u64);
        let run = match truthful_run(params.mechanism, game.as_ref(), params, trial_seed)? {
            Some(r) => r,
            None => {
                discarded += 1;
                continue;
            }
        };
        let follow = follow_utility(&run.tables[focal]);
        let swap_gain = best_swap_gain(&run.tables[focal]);

        let reduced_game = game.without_player(focal)?;
        let stream_ids: Vec<u64> = (0..n as u64).filter(|&i| i != focal as u64).collect();
        let reduced_dist = match mechanism_distribution(
            params.mechanism,
            reduced_game.as_ref(),
            params,
            trial_seed,
            Some(stream_ids),
        )? {
            Some(d) => d,
            None => {
                discarded += 1;
                continue;
            }
        };
        let optout = best_optout_utility(game.as_ref(), focal, &reduced_dist)?;

        swap_gains.push(swap_gain);
        optout_gains.push(optout - follow);
        alphas.push(run.alpha_ce);
    }
    if swap_gains.is_empty() {
        return Err(Error::MechanismFailure {
            round: 0,
            reason: "every audit trial failed".into(),
        });
    }
    let swap = gain_stat(&swap_gains);
    let optout = gain_stat(&optout_gains);
    let measured_alpha_mean = alphas.iter().sum::<f64>() / alphas.len() as f64;
    let (eps, delta) = match params.mechanism {
        AuditMechanism::Laplace | AuditMechanism::Median => (params.epsilon, params.delta),
        AuditMechanism::ExactOracle | AuditMechanism::NaiveMajority => (0.0, 0.0),
    };
    let (max_deviation_gain, stderr) = if swap.mean >= optout.mean {
        (swap.mean, swap.stderr)
    } else {
        (optout.mean, optout.stderr)
    };
    Ok(AuditReport {
        mechanism: params.mechanism,
        trials_used: swap_gains.len(),
        discarded,
        measured_alpha_mean,
        eta_claimed: eps + delta + measured_alpha_mean,
        swap_gain: swap,
        optout_gain: optout,
        max_deviation_gain,
        stderr,
    })
}

/// Exact evaluation of the naive rule's opt-out incentive at a pivotal
/// configuration: `n` odd, mountains one ahead of beaches, the focal player a
/// mountain type. Truthfully everyone is sent to the beach; opting out flips
/// the reported split and sends everyone else to the mountain, where the
/// focal player happily joins them.
#[derive(Debug, Clone, Copy)]
pub struct CounterexampleOutcome {
    pub follow_utility: f64,
    pub optout_utility: f64,
    pub gain: f64,
}

pub fn beach_counterexample_pivotal(n: usize) -> Result<CounterexampleOutcome> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::contract("counterexample needs odd n >= 3"));
    }
    let mountains = n.div_ceil(2);
    let mut types = vec![BEACH_TYPE; n];
    for t in types.iter_mut().take(mountains) {
        *t = MOUNTAIN_TYPE;
    }
    let focal = 0usize;
    let game = crate::suite::beach::BeachMountainGame::new(types)?;
    let truthful = naive_majority_distribution(&game);
    let tables = utility_tables(&truthful, &game)?;
    let follow = follow_utility(&tables[focal]);

    let reduced = game.without_player(focal)?;
    let reduced_dist = naive_majority_distribution(reduced.as_ref());
    let optout = best_optout_utility(&game, focal, &reduced_dist)?;
    Ok(CounterexampleOutcome {
        follow_utility: follow,
        optout_utility: optout,
        gain: optout - follow,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suite::beach::BeachMountainGame;
    use crate::suite::random::OwnActionGame;

    fn beach_template(n: usize) -> BeachMountainGame {
        BeachMountainGame::new(vec![BEACH_TYPE; n]).unwrap()
    }

    #[test]
    fn exact_oracle_audit_shows_no_deviation_gain() {
        let template = beach_template(5);
        let prior = TypePrior::bernoulli_beach(0.5).unwrap();
        let params = AuditParams {
            mechanism: AuditMechanism::ExactOracle,
            epsilon: 0.0,
            delta: 0.0,
            beta: 0.05,
            learner: LearnerKind::Swap,
            trials: 40,
            seed: 9,
            t_override: None,
        };
        let report = audit(&template, &prior, &params).unwrap();
        assert_eq!(report.discarded, 0);
        assert!(report.measured_alpha_mean.abs() < 1e-12);
        assert!(
            report.max_deviation_gain <= 3.0 * report.stderr + 1e-12,
            "oracle gain {} stderr {}",
            report.max_deviation_gain,
            report.stderr
        );
        assert!(report.passes());
    }

    #[test]
    fn zero_sensitivity_optout_gain_equals_best_response_gap() {
        // With utilities independent of everyone else, opting out cannot
        // change what others' recommendations are worth to the focal player,
        // so the opt-out gain is exactly the truthful branch's
        // best-fixed-action gap.
        let template = OwnActionGame::new(vec![PlayerType(0); 6], 2, 2, 13);
        let prior = TypePrior::bernoulli_beach(0.5).unwrap();
        let params = AuditParams {
            mechanism: AuditMechanism::Laplace,
            epsilon: 1.0,
            delta: 1e-6,
            beta: 0.05,
            learner: LearnerKind::Fixed,
            trials: 1,
            seed: 11,
            t_override: Some(32),
        };
        let report = audit(&template, &prior, &params).unwrap();

        // Replicate the single trial independently and compute the truthful
        // branch's best-fixed-action gap.
        let mut prior_rng = stream(params.seed, StreamKind::Trial, 0);
        let (types, focal) = prior.sample(6, &mut prior_rng);
        let game = template.with_types(&types).unwrap();
        let trial_seed = derive_seed(params.seed, StreamKind::Trial, 1);
        let budget = PrivacyBudget::joint(params.epsilon, params.delta).unwrap();
        let mut lp = laplace::LaplaceParams::new(budget, params.beta, params.learner, trial_seed);
        lp.t_override = params.t_override;
        let dist = laplace::run(game.as_ref(), &lp).unwrap().distribution();
        let tables = utility_tables(&dist, game.as_ref()).unwrap();
        let table = &tables[focal];
        let follow = follow_utility(table);
        let k = table.len();
        let best_fixed = (0..k)
            .map(|m| (0..k).map(|j| table[j][m]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let gap = best_fixed - follow;
        assert!(
            (report.optout_gain.mean - gap).abs() < 1e-12,
            "opt-out gain {} vs best-response gap {gap}",
            report.optout_gain.mean
        );
        assert!(report.passes());
    }

    #[test]
    fn pivotal_counterexample_gain_is_half() {
        let out = beach_counterexample_pivotal(101).unwrap();
        // Truthful: all at the beach, a mountain type earns 0.5; opting out
        // flips the rule, everyone else goes to the mountain and the focal
        // mountain type earns 1.
        assert!((out.follow_utility - 0.5).abs() < 1e-12);
        assert!((out.optout_utility - 1.0).abs() < 1e-12);
        assert!((out.gain - 0.5).abs() < 1e-12);
    }

    #[test]
    fn all_beach_population_has_no_naive_optout_gain() {
        // Everyone a beach type: the rule sends everyone to the mountain
        // (beach types are not a minority), and one opt-out cannot flip it.
        let game = beach_template(7);
        let truthful = naive_majority_distribution(&game);
        let tables = utility_tables(&truthful, &game).unwrap();
        let follow = follow_utility(&tables[0]);
        let reduced = game.without_player(0).unwrap();
        let reduced_dist = naive_majority_distribution(reduced.as_ref());
        let optout = best_optout_utility(&game, 0, &reduced_dist).unwrap();
        assert!(optout - follow <= 1e-12);
    }

    #[test]
    fn swap_branch_dominates_every_fixed_function_deviation() {
        // Coordinate-wise optimality: enumerate all k^k maps at k = 2 and
        // k = 3; the reported swap gain must match the best one found.
        use crate::strategy::DeviationMap;
        let beach = beach_template(4)
            .with_types(&[BEACH_TYPE, MOUNTAIN_TYPE, MOUNTAIN_TYPE, BEACH_TYPE])
            .unwrap();
        let wide: Box<dyn Game> =
            Box::new(OwnActionGame::new(vec![PlayerType(0), PlayerType(1), PlayerType(0)], 3, 2, 8));
        for game in [&beach, &wide] {
            let budget = PrivacyBudget::joint(5.0, 1e-6).unwrap();
            let mut lp = laplace::LaplaceParams::new(budget, 0.05, LearnerKind::Swap, 3);
            lp.t_override = Some(64);
            let dist = laplace::run(game.as_ref(), &lp).unwrap().distribution();
            let tables = utility_tables(&dist, game.as_ref()).unwrap();
            for table in &tables {
                let k = table.len();
                let reported = best_swap_gain(table);
                let follow = follow_utility(table);
                let mut best = f64::NEG_INFINITY;
                for map in DeviationMap::enumerate_all(k) {
                    let mapped: f64 = (0..k).map(|j| table[j][map.target(j)]).sum();
                    best = best.max(mapped - follow);
                    assert!(
                        mapped - follow <= reported + 1e-12,
                        "deviation {map:?} beats the reported optimum"
                    );
                }
                assert!((best - reported).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn median_mechanism_audit_passes_at_desk_scale() {
        let template = beach_template(4);
        let prior = TypePrior::bernoulli_beach(0.5).unwrap();
        let params = AuditParams {
            mechanism: AuditMechanism::Median,
            epsilon: 2e4,
            delta: 1e-15,
            beta: 0.05,
            learner: LearnerKind::Swap,
            trials: 20,
            seed: 17,
            t_override: None,
        };
        let report = audit(&template, &prior, &params).unwrap();
        let discard_rate = report.discarded as f64 / params.trials as f64;
        assert!(
            discard_rate <= params.beta + 0.02,
            "discard rate {discard_rate} too high"
        );
        assert!(report.passes());
    }
}
