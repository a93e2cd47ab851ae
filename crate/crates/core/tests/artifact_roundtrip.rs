use priveq_core::formats::DistributionFile;
use priveq_core::mech::{laplace, LearnerKind};
use priveq_core::privacy::PrivacyBudget;
use priveq_core::suite::beach::{BeachMountainGame, BEACH_TYPE, MOUNTAIN_TYPE};

#[test]
fn distribution_file_reload_is_bit_exact() {
    let types: Vec<_> = (0..6)
        .map(|i| if i % 2 == 0 { BEACH_TYPE } else { MOUNTAIN_TYPE })
        .collect();
    let game = BeachMountainGame::new(types).unwrap();
    let budget = PrivacyBudget::joint(1.0, 1e-6).unwrap();
    let mut params = laplace::LaplaceParams::new(budget, 0.05, LearnerKind::Swap, 3);
    params.t_override = Some(16);
    let run = laplace::run(&game, &params).unwrap();
    let dist = run.distribution();
    let file = DistributionFile::from_distribution(&dist);
    let text = serde_json::to_string(&file).unwrap();
    let reloaded: DistributionFile = serde_json::from_str(&text).unwrap();
    let dist2 = reloaded.into_distribution().unwrap();
    for t in 0..dist.rounds() {
        for i in 0..dist.players() {
            for j in 0..2 {
                let a = dist.round(t)[i].prob(j);
                let b = dist2.round(t)[i].prob(j);
                assert!(
                    a == b,
                    "round {t} player {i} action {j}: {a:.20e} vs {b:.20e} (diff {})",
                    (a - b).abs()
                );
            }
        }
    }
}
