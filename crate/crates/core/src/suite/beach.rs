//! The anonymous beach/mountain game.
//!
//! Each of `n` players goes to the beach (action 0) or the mountain
//! (action 1). With `p` the fraction of the *other* players at the beach,
//! raw payoffs are `10p` / `5(1-p)` for beach types and `5p` / `10(1-p)` for
//! mountain types; everything here is rescaled by `1/10` into `[0,1]`, and
//! the declared sensitivity `1/(n-1)` is stated post-rescaling. All-beach and
//! all-mountain are exact equilibria regardless of realized types.

use crate::error::{Error, Result};
use crate::game::{Game, PlayerType};

pub const BEACH_TYPE: PlayerType = PlayerType(0);
pub const MOUNTAIN_TYPE: PlayerType = PlayerType(1);

pub const BEACH_ACTION: usize = 0;
pub const MOUNTAIN_ACTION: usize = 1;

#[derive(Debug, Clone)]
pub struct BeachMountainGame {
    types: Vec<PlayerType>,
}

impl BeachMountainGame {
    pub fn new(types: Vec<PlayerType>) -> Result<Self> {
        if types.len() < 2 {
            return Err(Error::contract("beach/mountain needs n >= 2"));
        }
        if types.iter().any(|t| t.0 > 1) {
            return Err(Error::contract("beach/mountain types are 0 or 1"));
        }
        Ok(Self { types })
    }

    pub fn from_names(names: &[String]) -> Result<Self> {
        let types = names
            .iter()
            .map(|s| match s.as_str() {
                "beach" => Ok(BEACH_TYPE),
                "mountain" => Ok(MOUNTAIN_TYPE),
                other => Err(Error::format(format!("unknown beach/mountain type {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(types)
    }

    fn payoff(ptype: PlayerType, own: usize, beach_fraction: f64) -> f64 {
        let p = beach_fraction;
        match (ptype, own) {
            (BEACH_TYPE, BEACH_ACTION) => p,
            (BEACH_TYPE, MOUNTAIN_ACTION) => 0.5 * (1.0 - p),
            (MOUNTAIN_TYPE, BEACH_ACTION) => 0.5 * p,
            (MOUNTAIN_TYPE, MOUNTAIN_ACTION) => 1.0 - p,
            _ => unreachable!("validated at construction"),
        }
    }
}

impl Game for BeachMountainGame {
    fn player_count(&self) -> usize {
        self.types.len()
    }

    fn action_count(&self) -> usize {
        2
    }

    fn declared_sensitivity(&self) -> f64 {
        1.0 / (self.types.len() as f64 - 1.0)
    }

    fn player_type(&self, player: usize) -> PlayerType {
        self.types[player]
    }

    fn type_universe_size(&self) -> usize {
        2
    }

    fn type_name(&self, ptype: PlayerType) -> String {
        match ptype {
            BEACH_TYPE => "beach".into(),
            MOUNTAIN_TYPE => "mountain".into(),
            other => format!("type-{}", other.0),
        }
    }

    fn utility_as(&self, _seat: usize, ptype: PlayerType, own: usize, others: &[usize]) -> f64 {
        let beach = others.iter().filter(|&&a| a == BEACH_ACTION).count();
        Self::payoff(ptype, own, beach as f64 / others.len() as f64)
    }

    fn utility_from_counts(
        &self,
        _seat: usize,
        ptype: PlayerType,
        own: usize,
        counts: &[usize],
    ) -> Option<f64> {
        let m: usize = counts.iter().sum();
        Some(Self::payoff(ptype, own, counts[BEACH_ACTION] as f64 / m as f64))
    }

    fn is_aggregative(&self) -> bool {
        true
    }

    fn without_player(&self, player: usize) -> Result<Box<dyn Game>> {
        if player >= self.types.len() {
            return Err(Error::contract("player out of range"));
        }
        let mut types = self.types.clone();
        types.remove(player);
        Ok(Box::new(Self::new(types)?))
    }

    fn with_types(&self, types: &[PlayerType]) -> Result<Box<dyn Game>> {
        Ok(Box::new(Self::new(types.to_vec())?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{check_sensitivity, expected_loss, LossMode};
    use crate::rng::{stream, StreamKind};
    use crate::strategy::MixedStrategy;

    fn mixed_population(n: usize) -> BeachMountainGame {
        let types = (0..n)
            .map(|i| if i % 2 == 0 { BEACH_TYPE } else { MOUNTAIN_TYPE })
            .collect();
        BeachMountainGame::new(types).unwrap()
    }

    #[test]
    fn beach_type_at_full_beach_has_zero_beach_loss() {
        // 99 others all at the beach: the beach action pays the maximum 1,
        // so its loss is 0; the mountain action pays (1-p)/2 = 0, loss 1.
        let game = BeachMountainGame::new(vec![BEACH_TYPE; 100]).unwrap();
        let others = vec![MixedStrategy::point_mass(2, BEACH_ACTION); 99];
        let l = expected_loss(&game, 0, &others, LossMode::Anonymous, None).unwrap();
        assert!((l.values[BEACH_ACTION] - 0.0).abs() < 1e-12);
        assert!((l.values[MOUNTAIN_ACTION] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_beach_and_all_mountain_are_best_responses_for_every_type() {
        // At either corner profile, no player of either type gains by moving.
        for n in [2usize, 5, 11] {
            let game = mixed_population(n);
            for (corner, stay, go) in [
                (BEACH_ACTION, BEACH_ACTION, MOUNTAIN_ACTION),
                (MOUNTAIN_ACTION, MOUNTAIN_ACTION, BEACH_ACTION),
            ] {
                let others = vec![corner; n - 1];
                for seat in 0..n {
                    let u_stay = game.utility(seat, stay, &others);
                    let u_go = game.utility(seat, go, &others);
                    assert!(
                        u_stay >= u_go,
                        "corner {corner} not an equilibrium for seat {seat} at n={n}"
                    );
                }
            }
        }
    }

    #[test]
    fn observed_sensitivity_within_declared() {
        let game = mixed_population(101);
        let mut rng = stream(30, StreamKind::Aux, 70);
        let report = check_sensitivity(&game, 100_000, &mut rng);
        assert!(
            report.within_declared(),
            "observed {} > declared {} (witness {:?})",
            report.max_observed,
            report.declared,
            report.witness
        );
        // The bound is attained: one mover shifts p by exactly 1/(n-1) and
        // the mountain payoff moves by that much.
        assert!(report.max_observed > 0.5 / 100.0);
    }

    #[test]
    fn anonymous_and_exact_backends_agree_on_small_populations() {
        let mut rng = stream(31, StreamKind::Aux, 71);
        for n in 3..=8usize {
            let game = mixed_population(n);
            let others: Vec<MixedStrategy> = (0..n - 1)
                .map(|_| {
                    let p: f64 = rand::Rng::gen(&mut rng);
                    MixedStrategy::from_f64_slice(&[p, 1.0 - p]).unwrap()
                })
                .collect();
            let exact = expected_loss(&game, 0, &others, LossMode::Exact, None).unwrap();
            let anon = expected_loss(&game, 0, &others, LossMode::Anonymous, None).unwrap();
            for j in 0..2 {
                assert!(
                    (exact.values[j] - anon.values[j]).abs() < 1e-9,
                    "n={n} action {j}: {} vs {}",
                    exact.values[j],
                    anon.values[j]
                );
            }
        }
    }

    #[test]
    fn opt_out_reduction_drops_exactly_one_player() {
        let game = mixed_population(5);
        let reduced = game.without_player(2).unwrap();
        assert_eq!(reduced.player_count(), 4);
        assert_eq!(reduced.player_type(2), game.player_type(3));
    }
}
