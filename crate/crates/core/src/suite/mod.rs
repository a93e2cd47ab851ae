//! Concrete game families and the builder that turns a game spec file into
//! a live game.

pub mod beach;
pub mod lowerbound;
pub mod random;
pub mod sawtooth;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::game::spec::GameSpecFile;
use crate::game::{Game, PlayerType};

use beach::BeachMountainGame;
use lowerbound::{LowerBoundGame, SubsetSumFile, SubsetSumInstance};
use random::{OwnActionGame, RandomGame};

/// Build a game from its on-disk description.
///
/// Families: `beach_mountain` (types "beach"/"mountain", no params),
/// `random` (params `{"seed"}`), `own_action` (zero-sensitivity; params
/// `{"seed", "universe"}`, types `type-<id>`), and `lowerbound`
/// (params `{"database", "queries"}` in the 1-based file convention).
pub fn build_game(spec: &GameSpecFile) -> Result<Box<dyn Game>> {
    let game: Box<dyn Game> = match spec.family.as_str() {
        "beach_mountain" => {
            let game = BeachMountainGame::from_names(&spec.types)?;
            expect(spec.n == game.player_count(), "n mismatch with types")?;
            expect(spec.k == 2, "beach_mountain has k = 2")?;
            Box::new(game)
        }
        "random" => {
            let seed = param_u64(&spec.params, "seed")?;
            expect(spec.n >= 2 && spec.k >= 2, "random needs n, k >= 2")?;
            Box::new(RandomGame::new(spec.n, spec.k, seed))
        }
        "own_action" => {
            let seed = param_u64(&spec.params, "seed")?;
            let universe = param_u64(&spec.params, "universe")? as usize;
            let types = spec
                .types
                .iter()
                .map(|name| parse_numbered_type(name, universe))
                .collect::<Result<Vec<_>>>()?;
            expect(types.len() == spec.n, "n mismatch with types")?;
            Box::new(OwnActionGame::new(types, spec.k, universe, seed))
        }
        "lowerbound" => {
            let file: SubsetSumFile = serde_json::from_value(spec.params.clone())
                .map_err(|e| Error::format(format!("lowerbound params: {e}")))?;
            let game = LowerBoundGame::new(file.into_instance()?)?;
            expect(spec.n == game.player_count(), "n mismatch with instance")?;
            Box::new(game)
        }
        other => return Err(Error::format(format!("unknown game family {other:?}"))),
    };
    let declared = spec.gamma;
    if (declared - game.declared_sensitivity()).abs() > 1e-12 {
        return Err(Error::format(format!(
            "spec gamma {declared} disagrees with family sensitivity {}",
            game.declared_sensitivity()
        )));
    }
    Ok(game)
}

/// The canonical spec file for a live game.
pub fn describe_game(family: &str, game: &dyn Game, params: Value) -> GameSpecFile {
    GameSpecFile {
        family: family.to_string(),
        n: game.player_count(),
        k: game.action_count(),
        gamma: game.declared_sensitivity(),
        types: (0..game.player_count())
            .map(|i| game.type_name(game.player_type(i)))
            .collect(),
        params,
        null_action: game.null_action(),
    }
}

/// A beach/mountain spec file for the given type assignment.
pub fn beach_spec(types: &[PlayerType]) -> Result<GameSpecFile> {
    let game = BeachMountainGame::new(types.to_vec())?;
    Ok(describe_game("beach_mountain", &game, Value::Object(Default::default())))
}

/// A lowerbound spec file for the given instance.
pub fn lowerbound_spec(instance: &SubsetSumInstance) -> Result<GameSpecFile> {
    let game = LowerBoundGame::new(instance.clone())?;
    let params = serde_json::to_value(SubsetSumFile::from_instance(instance))?;
    Ok(describe_game("lowerbound", &game, params))
}

fn parse_numbered_type(name: &str, universe: usize) -> Result<PlayerType> {
    let id: u32 = name
        .strip_prefix("type-")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::format(format!("bad type name {name:?}")))?;
    if id as usize >= universe {
        return Err(Error::format(format!("type {name:?} outside universe")));
    }
    Ok(PlayerType(id))
}

fn param_u64(params: &Value, key: &str) -> Result<u64> {
    params
        .get(key)
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::format(format!("missing or non-integer param {key:?}")))
}

fn expect(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::format(msg.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beach_spec_roundtrips_through_builder() {
        let spec = beach_spec(&[PlayerType(0), PlayerType(1), PlayerType(0)]).unwrap();
        let game = build_game(&spec).unwrap();
        assert_eq!(game.player_count(), 3);
        assert_eq!(game.type_name(game.player_type(1)), "mountain");
        let text = spec.to_canonical_json();
        let reloaded = GameSpecFile::from_json(&text).unwrap();
        assert_eq!(reloaded.to_canonical_json(), text);
    }

    #[test]
    fn gamma_mismatch_is_rejected() {
        let mut spec = beach_spec(&[PlayerType(0), PlayerType(1)]).unwrap();
        spec.gamma = 0.123;
        assert!(build_game(&spec).is_err());
    }

    #[test]
    fn lowerbound_spec_builds_the_reduction_game() {
        let inst = SubsetSumInstance::new(vec![1, 0, 1, 1], vec![vec![0, 2]]).unwrap();
        let spec = lowerbound_spec(&inst).unwrap();
        assert_eq!(spec.family, "lowerbound");
        let game = build_game(&spec).unwrap();
        assert_eq!(game.player_count(), 4 + 2);
        assert!((spec.gamma - 0.25).abs() < 1e-15);
    }
}
