//! Core abstractions for n-player, k-action, low-sensitivity games with
//! type-dependent utilities, and the expected-loss backends the mechanisms
//! run on.

mod counts;
pub mod spec;

pub(crate) use counts::CountDistribution;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::strategy::MixedStrategy;

/// Enumeration budget for the exact product-distribution backend.
pub const EXACT_ENUM_BUDGET: f64 = 1e7;

/// Index into a game's action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionId(pub usize);

/// Opaque identifier into a game family's finite type universe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlayerType(pub u32);

/// One action per player.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionProfile(pub Vec<usize>);

impl ActionProfile {
    pub fn validate(&self, n: usize, k: usize) -> Result<()> {
        if self.0.len() != n {
            return Err(Error::contract(format!(
                "profile has {} entries for {n} players",
                self.0.len()
            )));
        }
        if self.0.iter().any(|&a| a >= k) {
            return Err(Error::contract("profile action out of range"));
        }
        Ok(())
    }
}

/// An n-player complete-information game with utilities in `[0,1]`.
///
/// `others` slices are in player order with the focal seat removed, so
/// `others[i]` belongs to player `i` when `i < seat` and to player `i + 1`
/// otherwise. Utilities must stay in `[0,1]`; families whose natural payoffs
/// live elsewhere declare an affine rescaling and state their sensitivity
/// post-rescaling.
pub trait Game: Send + Sync {
    fn player_count(&self) -> usize;
    fn action_count(&self) -> usize;

    /// Declared sensitivity: how much one player's action can move any other
    /// player's utility. Checked empirically by [`check_sensitivity`].
    fn declared_sensitivity(&self) -> f64;

    fn player_type(&self, player: usize) -> PlayerType;

    /// Size of the family's type universe (the candidate-net mechanism
    /// enumerates `U^n` tuples).
    fn type_universe_size(&self) -> usize;

    fn type_name(&self, ptype: PlayerType) -> String {
        format!("type-{}", ptype.0)
    }

    /// Reserved opt-out action, when the family declares one.
    fn null_action(&self) -> Option<usize> {
        None
    }

    /// Utility of a (possibly hypothetical) type played at `seat`.
    fn utility_as(&self, seat: usize, ptype: PlayerType, own: usize, others: &[usize]) -> f64;

    fn utility(&self, seat: usize, own: usize, others: &[usize]) -> f64 {
        self.utility_as(seat, self.player_type(seat), own, others)
    }

    /// Utility of a full profile for the player at `seat`.
    fn utility_profile(&self, seat: usize, profile: &[usize]) -> f64 {
        let mut others = Vec::with_capacity(profile.len() - 1);
        others.extend_from_slice(&profile[..seat]);
        others.extend_from_slice(&profile[seat + 1..]);
        self.utility(seat, profile[seat], &others)
    }

    /// Aggregative evaluation: utility from own action, own type, and the
    /// per-action counts of the *other* players. `None` when the family has
    /// no such structure.
    fn utility_from_counts(
        &self,
        seat: usize,
        ptype: PlayerType,
        own: usize,
        counts: &[usize],
    ) -> Option<f64> {
        let _ = (seat, ptype, own, counts);
        None
    }

    fn is_aggregative(&self) -> bool {
        false
    }

    /// The reduced game with one player removed: the proxy's view when that
    /// player opts out. Remaining players keep their order.
    fn without_player(&self, player: usize) -> Result<Box<dyn Game>> {
        let _ = player;
        Err(Error::contract(
            "this game family does not support opt-out reduction",
        ))
    }

    /// Same family and parameters with a different type assignment.
    fn with_types(&self, types: &[PlayerType]) -> Result<Box<dyn Game>> {
        let _ = types;
        Err(Error::contract(
            "this game family does not support type reassignment",
        ))
    }
}

/// How expected losses are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossMode {
    /// Full enumeration of the opponents' product distribution.
    Exact,
    /// Exact dynamic programming over opponent action counts; needs an
    /// aggregative family.
    Anonymous,
    /// Averaging over independent profile draws, with standard errors.
    MonteCarlo { samples: usize },
}

impl LossMode {
    pub fn label(self) -> &'static str {
        match self {
            LossMode::Exact => "exact",
            LossMode::Anonymous => "anonymous",
            LossMode::MonteCarlo { .. } => "monte_carlo",
        }
    }
}

/// Pick the default backend for a game: counts for aggregative families,
/// exact when the enumeration fits the budget, Monte Carlo otherwise.
pub fn default_loss_mode(game: &dyn Game) -> LossMode {
    if game.is_aggregative() {
        LossMode::Anonymous
    } else {
        let combos = (game.action_count() as f64).powi(game.player_count() as i32 - 1);
        if combos <= EXACT_ENUM_BUDGET {
            LossMode::Exact
        } else {
            LossMode::MonteCarlo { samples: 10_000 }
        }
    }
}

/// Per-action expected losses `l_j = 1 - E[u(j, a_others)]`, each in `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossVector {
    pub values: Vec<f64>,
    /// Standard errors, present in Monte Carlo mode.
    pub stderr: Option<Vec<f64>>,
}

/// Expected losses for one player against a product profile of the others.
///
/// `others.len()` must be `n - 1`. Monte Carlo mode needs an rng stream;
/// callers hand per-player substreams so concurrent players stay independent.
pub fn expected_loss(
    game: &dyn Game,
    seat: usize,
    others: &[MixedStrategy],
    mode: LossMode,
    rng: Option<&mut Stream>,
) -> Result<LossVector> {
    expected_loss_as(game, seat, game.player_type(seat), others, mode, rng)
}

/// [`expected_loss`] for a hypothetical type at the seat; the candidate-net
/// mechanism queries every possible type this way.
pub fn expected_loss_as(
    game: &dyn Game,
    seat: usize,
    ptype: PlayerType,
    others: &[MixedStrategy],
    mode: LossMode,
    rng: Option<&mut Stream>,
) -> Result<LossVector> {
    let n = game.player_count();
    let k = game.action_count();
    if seat >= n {
        return Err(Error::contract("seat out of range"));
    }
    if others.len() + 1 != n {
        return Err(Error::contract(format!(
            "expected {} opponent strategies, got {}",
            n - 1,
            others.len()
        )));
    }
    if others.iter().any(|s| s.k() != k) {
        return Err(Error::contract("opponent strategy action count mismatch"));
    }
    match mode {
        LossMode::Exact => exact_losses(game, seat, ptype, others),
        LossMode::Anonymous => {
            if !game.is_aggregative() {
                return Err(Error::contract(
                    "anonymous loss mode needs an aggregative game family",
                ));
            }
            let dist = CountDistribution::of(k, others)?;
            losses_from_counts(game, seat, ptype, &dist)
        }
        LossMode::MonteCarlo { samples } => {
            let rng = rng.ok_or_else(|| {
                Error::contract("monte_carlo loss mode needs an rng stream")
            })?;
            monte_carlo_losses(game, seat, ptype, others, samples, rng)
        }
    }
}

/// Expected losses for every player at once.
///
/// For aggregative games this builds the full count distribution once per
/// round and removes one player at a time, instead of building `n` separate
/// distributions; everything else delegates to [`expected_loss`].
pub fn expected_losses_all(
    game: &dyn Game,
    strategies: &[MixedStrategy],
    mode: LossMode,
    mut rng: Option<&mut Stream>,
) -> Result<Vec<LossVector>> {
    let n = game.player_count();
    if strategies.len() != n {
        return Err(Error::contract("one strategy per player required"));
    }
    if mode == LossMode::Anonymous && game.is_aggregative() && game.action_count() == 2 {
        let k = game.action_count();
        let refs: Vec<&MixedStrategy> = strategies.iter().collect();
        let full = CountDistribution::of_refs(k, &refs)?;
        let mut out = Vec::with_capacity(n);
        for seat in 0..n {
            // Remove one player's contribution by deconvolution; rebuild
            // from scratch on the rare numerically borderline profile.
            let holdout = match full.deconvolve_one(&strategies[seat]) {
                Some(d) => d,
                None => {
                    let others: Vec<&MixedStrategy> = strategies
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != seat)
                        .map(|(_, s)| s)
                        .collect();
                    CountDistribution::of_refs(k, &others)?
                }
            };
            out.push(losses_from_counts(
                game,
                seat,
                game.player_type(seat),
                &holdout,
            )?);
        }
        return Ok(out);
    }
    let mut out = Vec::with_capacity(n);
    for seat in 0..n {
        let others: Vec<MixedStrategy> = strategies
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != seat)
            .map(|(_, s)| s.clone())
            .collect();
        out.push(expected_loss_as(
            game,
            seat,
            game.player_type(seat),
            &others,
            mode,
            rng.as_deref_mut(),
        )?);
    }
    Ok(out)
}

fn exact_losses(
    game: &dyn Game,
    seat: usize,
    ptype: PlayerType,
    others: &[MixedStrategy],
) -> Result<LossVector> {
    let k = game.action_count();
    let m = others.len();
    let combos = (k as f64).powi(m as i32);
    if combos > EXACT_ENUM_BUDGET {
        return Err(Error::resource(format!(
            "exact enumeration of {combos:.3e} profiles exceeds budget {EXACT_ENUM_BUDGET:.0e}"
        )));
    }
    let mut expected_u = vec![0.0_f64; k];
    let mut assignment = vec![0usize; m];
    loop {
        let mut weight = 1.0;
        for (i, s) in others.iter().enumerate() {
            weight *= s.prob(assignment[i]);
            if weight == 0.0 {
                break;
            }
        }
        if weight > 0.0 {
            for (j, eu) in expected_u.iter_mut().enumerate() {
                *eu += weight * game.utility_as(seat, ptype, j, &assignment);
            }
        }
        // Odometer.
        let mut pos = 0;
        loop {
            if pos == m {
                return finish_losses(expected_u, None);
            }
            assignment[pos] += 1;
            if assignment[pos] < k {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
        if m == 0 {
            return finish_losses(expected_u, None);
        }
    }
}

fn losses_from_counts(
    game: &dyn Game,
    seat: usize,
    ptype: PlayerType,
    dist: &CountDistribution,
) -> Result<LossVector> {
    let k = game.action_count();
    let mut expected_u = vec![0.0_f64; k];
    dist.for_each(|counts, p| {
        if p == 0.0 {
            return;
        }
        for (j, eu) in expected_u.iter_mut().enumerate() {
            let u = game
                .utility_from_counts(seat, ptype, j, counts)
                .expect("aggregative family must evaluate counts");
            *eu += p * u;
        }
    });
    finish_losses(expected_u, None)
}

fn monte_carlo_losses(
    game: &dyn Game,
    seat: usize,
    ptype: PlayerType,
    others: &[MixedStrategy],
    samples: usize,
    rng: &mut Stream,
) -> Result<LossVector> {
    if samples == 0 {
        return Err(Error::contract("monte_carlo needs samples >= 1"));
    }
    let k = game.action_count();
    let m = others.len();
    let mut sum = vec![0.0_f64; k];
    let mut sum_sq = vec![0.0_f64; k];
    let mut assignment = vec![0usize; m];
    for _ in 0..samples {
        for (i, s) in others.iter().enumerate() {
            assignment[i] = s.sample(rng);
        }
        for j in 0..k {
            let u = game.utility_as(seat, ptype, j, &assignment);
            sum[j] += u;
            sum_sq[j] += u * u;
        }
    }
    let inv = 1.0 / samples as f64;
    let mut stderr = vec![0.0_f64; k];
    let mut expected_u = vec![0.0_f64; k];
    for j in 0..k {
        let mean = sum[j] * inv;
        expected_u[j] = mean;
        let var = (sum_sq[j] * inv - mean * mean).max(0.0);
        stderr[j] = (var / samples as f64).sqrt();
    }
    finish_losses(expected_u, Some(stderr))
}

fn finish_losses(expected_u: Vec<f64>, stderr: Option<Vec<f64>>) -> Result<LossVector> {
    let values: Vec<f64> = expected_u.into_iter().map(|u| 1.0 - u).collect();
    if values.iter().any(|&l| !(-1e-9..=1.0 + 1e-9).contains(&l)) {
        return Err(Error::numeric(format!(
            "expected loss escaped [0,1]: {values:?} (utilities must live in [0,1])"
        )));
    }
    Ok(LossVector {
        values: values.into_iter().map(|l| l.clamp(0.0, 1.0)).collect(),
        stderr,
    })
}

/// Outcome of an empirical sensitivity probe.
#[derive(Debug, Clone)]
pub struct SensitivityReport {
    pub max_observed: f64,
    pub declared: f64,
    /// `(observer, mover, action, alternative, profile)` attaining the max.
    pub witness: Option<(usize, usize, usize, usize, Vec<usize>)>,
}

impl SensitivityReport {
    pub fn within_declared(&self) -> bool {
        self.max_observed <= self.declared + 1e-12
    }
}

/// Samples random `(observer, mover, action pair, background profile)` tuples
/// and reports the largest utility swing a single player's action change
/// inflicted on someone else.
pub fn check_sensitivity(game: &dyn Game, probes: usize, rng: &mut Stream) -> SensitivityReport {
    let n = game.player_count();
    let k = game.action_count();
    assert!(probes >= 1 && n >= 2, "need probes >= 1 and n >= 2");
    let mut max_observed = 0.0_f64;
    let mut witness = None;
    let mut profile = vec![0usize; n];
    for _ in 0..probes {
        for slot in profile.iter_mut() {
            *slot = rng.gen_range(0..k);
        }
        let mover = rng.gen_range(0..n);
        let observer = loop {
            let candidate = rng.gen_range(0..n);
            if candidate != mover {
                break candidate;
            }
        };
        let a = rng.gen_range(0..k);
        let b = rng.gen_range(0..k);
        profile[mover] = a;
        let u_a = game.utility_profile(observer, &profile);
        profile[mover] = b;
        let u_b = game.utility_profile(observer, &profile);
        let swing = (u_a - u_b).abs();
        if swing > max_observed {
            max_observed = swing;
            profile[mover] = a;
            witness = Some((observer, mover, a, b, profile.clone()));
        }
    }
    SensitivityReport {
        max_observed,
        declared: game.declared_sensitivity(),
        witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamKind};

    /// Two-player matching game: utility 1 iff own action equals the
    /// opponent's.
    struct Matching;

    impl Game for Matching {
        fn player_count(&self) -> usize {
            2
        }
        fn action_count(&self) -> usize {
            2
        }
        fn declared_sensitivity(&self) -> f64 {
            1.0
        }
        fn player_type(&self, _player: usize) -> PlayerType {
            PlayerType(0)
        }
        fn type_universe_size(&self) -> usize {
            1
        }
        fn utility_as(&self, _seat: usize, _t: PlayerType, own: usize, others: &[usize]) -> f64 {
            if own == others[0] {
                1.0
            } else {
                0.0
            }
        }
    }

    #[test]
    fn point_mass_opponent_gives_indicator_losses() {
        let opponent = vec![MixedStrategy::point_mass(2, 0)];
        let l = expected_loss(&Matching, 0, &opponent, LossMode::Exact, None).unwrap();
        assert_eq!(l.values, vec![0.0, 1.0]);
    }

    #[test]
    fn wrong_opponent_count_is_rejected() {
        assert!(expected_loss(&Matching, 0, &[], LossMode::Exact, None).is_err());
    }

    #[test]
    fn anonymous_mode_requires_aggregative_structure() {
        let opponent = vec![MixedStrategy::uniform(2)];
        let err = expected_loss(&Matching, 0, &opponent, LossMode::Anonymous, None);
        assert!(err.is_err());
    }

    #[test]
    fn exact_budget_is_enforced() {
        struct Wide;
        impl Game for Wide {
            fn player_count(&self) -> usize {
                30
            }
            fn action_count(&self) -> usize {
                4
            }
            fn declared_sensitivity(&self) -> f64 {
                1.0
            }
            fn player_type(&self, _p: usize) -> PlayerType {
                PlayerType(0)
            }
            fn type_universe_size(&self) -> usize {
                1
            }
            fn utility_as(&self, _s: usize, _t: PlayerType, _o: usize, _x: &[usize]) -> f64 {
                0.5
            }
        }
        let others = vec![MixedStrategy::uniform(4); 29];
        match expected_loss(&Wide, 0, &others, LossMode::Exact, None) {
            Err(Error::Resource(_)) => {}
            other => panic!("expected resource error, got {other:?}"),
        }
    }

    #[test]
    fn monte_carlo_agrees_with_exact_within_three_stderr() {
        // Random 3-player, 2-action game, mixed opponents.
        use crate::suite::random::RandomGame;
        let game = RandomGame::new(3, 2, 99);
        let others = vec![
            MixedStrategy::from_f64_slice(&[0.3, 0.7]).unwrap(),
            MixedStrategy::from_f64_slice(&[0.6, 0.4]).unwrap(),
        ];
        let exact = expected_loss(&game, 1, &others, LossMode::Exact, None).unwrap();
        let mut rng = stream(17, StreamKind::PlayerLoss, 1);
        let mc = expected_loss(
            &game,
            1,
            &others,
            LossMode::MonteCarlo { samples: 100_000 },
            Some(&mut rng),
        )
        .unwrap();
        let stderr = mc.stderr.unwrap();
        for j in 0..2 {
            let gap = (mc.values[j] - exact.values[j]).abs();
            assert!(
                gap <= 3.0 * stderr[j].max(1e-6),
                "action {j}: gap {gap} stderr {}",
                stderr[j]
            );
        }
    }

    #[test]
    fn expected_loss_is_affine_in_each_opponent_strategy() {
        use crate::suite::random::RandomGame;
        let game = RandomGame::new(4, 3, 5);
        let mut rng = stream(18, StreamKind::Aux, 40);
        for _ in 0..20 {
            let rand_strategy = |rng: &mut Stream| {
                let raw: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() + 1e-3).collect();
                MixedStrategy::from_weights(raw).unwrap()
            };
            let base: Vec<MixedStrategy> = (0..3).map(|_| rand_strategy(&mut rng)).collect();
            let alt = rand_strategy(&mut rng);
            let w: f64 = rng.gen();
            let which = rng.gen_range(0..3);

            let mut mixed = base.clone();
            let blended: Vec<f64> = (0..3)
                .map(|j| w * base[which].prob(j) + (1.0 - w) * alt.prob(j))
                .collect();
            mixed[which] = MixedStrategy::new(blended).unwrap();
            let mut swapped = base.clone();
            swapped[which] = alt;

            let l_base = expected_loss(&game, 0, &base, LossMode::Exact, None).unwrap();
            let l_alt = expected_loss(&game, 0, &swapped, LossMode::Exact, None).unwrap();
            let l_mix = expected_loss(&game, 0, &mixed, LossMode::Exact, None).unwrap();
            for j in 0..3 {
                let expect = w * l_base.values[j] + (1.0 - w) * l_alt.values[j];
                assert!(
                    (l_mix.values[j] - expect).abs() < 1e-9,
                    "affinity violated: {} vs {expect}",
                    l_mix.values[j]
                );
            }
        }
    }
}
