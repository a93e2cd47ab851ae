//! Seeded random-utility games, used as oracle fodder for backend
//! cross-checks. Utilities are hash-derived, so no tables are stored and any
//! (n, k) is cheap.

use crate::game::{Game, PlayerType};

/// Utilities are a deterministic hash of (seed, type, own action, others'
//  actions), uniform-ish in [0,1]; sensitivity is declared at the trivial
/// bound 1.
#[derive(Debug, Clone)]
pub struct RandomGame {
    n: usize,
    k: usize,
    seed: u64,
}

impl RandomGame {
    pub fn new(n: usize, k: usize, seed: u64) -> Self {
        assert!(n >= 2 && k >= 2);
        Self { n, k, seed }
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

impl Game for RandomGame {
    fn player_count(&self) -> usize {
        self.n
    }

    fn action_count(&self) -> usize {
        self.k
    }

    fn declared_sensitivity(&self) -> f64 {
        1.0
    }

    fn player_type(&self, player: usize) -> PlayerType {
        PlayerType(player as u32)
    }

    fn type_universe_size(&self) -> usize {
        self.n
    }

    fn utility_as(&self, _seat: usize, ptype: PlayerType, own: usize, others: &[usize]) -> f64 {
        let mut h = splitmix(self.seed ^ 0xC0FFEE);
        h = splitmix(h ^ u64::from(ptype.0));
        h = splitmix(h ^ own as u64);
        for &a in others {
            h = splitmix(h.wrapping_mul(31).wrapping_add(a as u64 + 1));
        }
        (h >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// A zero-sensitivity family: utility depends only on own type and action.
/// Useful wherever "opting out cannot move anyone else" must hold exactly.
#[derive(Debug, Clone)]
pub struct OwnActionGame {
    types: Vec<PlayerType>,
    k: usize,
    universe: usize,
    seed: u64,
}

impl OwnActionGame {
    pub fn new(types: Vec<PlayerType>, k: usize, universe: usize, seed: u64) -> Self {
        assert!(types.len() >= 2 && k >= 2 && universe >= 1);
        assert!(types.iter().all(|t| (t.0 as usize) < universe));
        Self {
            types,
            k,
            universe,
            seed,
        }
    }

    /// The payoff table entry for (type, action).
    pub fn payoff(&self, ptype: PlayerType, own: usize) -> f64 {
        let mut h = splitmix(self.seed ^ 0x0A11);
        h = splitmix(h ^ u64::from(ptype.0));
        h = splitmix(h ^ own as u64);
        (h >> 11) as f64 / (1u64 << 53) as f64
    }
}

impl Game for OwnActionGame {
    fn player_count(&self) -> usize {
        self.types.len()
    }

    fn action_count(&self) -> usize {
        self.k
    }

    fn declared_sensitivity(&self) -> f64 {
        0.0
    }

    fn player_type(&self, player: usize) -> PlayerType {
        self.types[player]
    }

    fn type_universe_size(&self) -> usize {
        self.universe
    }

    fn utility_as(&self, _seat: usize, ptype: PlayerType, own: usize, _others: &[usize]) -> f64 {
        self.payoff(ptype, own)
    }

    fn utility_from_counts(
        &self,
        _seat: usize,
        ptype: PlayerType,
        own: usize,
        _counts: &[usize],
    ) -> Option<f64> {
        Some(self.payoff(ptype, own))
    }

    fn is_aggregative(&self) -> bool {
        true
    }

    fn without_player(&self, player: usize) -> crate::error::Result<Box<dyn Game>> {
        let mut types = self.types.clone();
        types.remove(player);
        Ok(Box::new(Self::new(types, self.k, self.universe, self.seed)))
    }

    fn with_types(&self, types: &[PlayerType]) -> crate::error::Result<Box<dyn Game>> {
        Ok(Box::new(Self::new(
            types.to_vec(),
            self.k,
            self.universe,
            self.seed,
        )))
    }
}
