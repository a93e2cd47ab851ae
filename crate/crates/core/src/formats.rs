//! Versioned on-disk artifacts: run manifests, correlated-distribution
//! files, equilibrium certificates, decoder reports, and the regret-trace
//! CSV. All JSON is written canonically (pretty, trailing newline) so equal
//! runs produce byte-identical artifacts.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::equilibrium::{CorrelatedDistribution, EquilibriumCertificate};
use crate::error::Result;
use crate::mech::{median::MedianRun, median::MedianStatus, MechanismRun};
use crate::noregret::DeviationFamily;
use crate::strategy::MixedStrategy;

pub const SCHEMA_VERSION: u32 = 1;

/// Build identifier embedded in every artifact.
pub fn build_id() -> String {
    format!("priveq-v{}", env!("CARGO_PKG_VERSION"))
}

fn canonical<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, canonical(value))?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Run manifest: full resolved configuration plus accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: u32,
    pub build: String,
    pub mechanism: String,
    pub learner: String,
    pub status: String,
    pub failure_round: Option<usize>,
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
    pub gamma: f64,
    pub n: usize,
    pub k: usize,
    pub t: u64,
    pub t_source: String,
    pub constraint_satisfied: bool,
    pub sigma: Option<f64>,
    pub per_step_epsilon: Option<f64>,
    pub ledger_draws: u64,
    pub composed_epsilon: f64,
    pub composed_delta: f64,
    pub predicted_alpha: f64,
    pub alpha_mm: Option<f64>,
    pub hard_queries: Option<usize>,
    pub hard_cap: Option<usize>,
    pub loss_mode: String,
    pub clamped_entries: u64,
    pub seed: u64,
    /// All logarithms in the accounting are natural logs.
    pub log_convention: String,
    /// Echo of the caller's resolved configuration, for bit-exact reruns.
    pub config: serde_json::Value,
}

impl RunManifest {
    pub fn for_laplace(run: &MechanismRun, beta: f64, gamma: f64, learner: &str) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            build: build_id(),
            mechanism: "laplace".into(),
            learner: learner.into(),
            status: "ok".into(),
            failure_round: None,
            epsilon: run.composed_epsilon,
            delta: run.composed_delta,
            beta,
            gamma,
            n: run.n,
            k: run.k,
            t: run.t,
            t_source: run.round_source.label().into(),
            constraint_satisfied: run.constraint_satisfied,
            sigma: Some(run.sigma),
            per_step_epsilon: Some(run.per_step_epsilon),
            ledger_draws: run.ledger_draws,
            composed_epsilon: run.composed_epsilon,
            composed_delta: run.composed_delta,
            predicted_alpha: run.predicted_alpha,
            alpha_mm: None,
            hard_queries: None,
            hard_cap: None,
            loss_mode: run.loss_mode.into(),
            clamped_entries: run.total_clamped(),
            seed: run.seed,
            log_convention: "natural".into(),
            config: serde_json::Value::Null,
        }
    }

    pub fn for_median(out: &MedianRun, budget_epsilon: f64, beta: f64, gamma: f64, learner: &str) -> Self {
        let mut m = Self::for_laplace(&out.run, beta, gamma, learner);
        m.mechanism = "median".into();
        m.epsilon = budget_epsilon;
        m.sigma = None;
        m.per_step_epsilon = None;
        m.alpha_mm = Some(out.alpha_mm);
        m.hard_queries = Some(out.hard_queries);
        m.hard_cap = Some(out.hard_cap);
        if let MedianStatus::Failure { round } = out.status {
            m.status = "median_failure".into();
            m.failure_round = Some(round);
        }
        m
    }
}

/// Correlated distribution on disk: per-round, per-player probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionFile {
    pub schema: u32,
    pub build: String,
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub rounds: Vec<Vec<Vec<f64>>>,
}

impl DistributionFile {
    pub fn from_distribution(dist: &CorrelatedDistribution) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            build: build_id(),
            n: dist.players(),
            k: dist.k(),
            t: dist.rounds(),
            rounds: dist
                .all_rounds()
                .iter()
                .map(|round| round.iter().map(|s| s.to_f64_vec()).collect())
                .collect(),
        }
    }

    pub fn into_distribution(self) -> Result<CorrelatedDistribution> {
        let rounds = self
            .rounds
            .into_iter()
            .map(|round| {
                round
                    .into_iter()
                    .map(MixedStrategy::from_stored)
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        CorrelatedDistribution::from_rounds(rounds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerRegretFile {
    pub fixed: f64,
    pub swap: f64,
}

/// Certificate artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub schema: u32,
    pub build: String,
    pub alpha_cce: f64,
    pub alpha_ce: f64,
    pub per_player: Vec<PlayerRegretFile>,
    pub mode: String,
    pub stderr: Option<f64>,
}

impl CertificateFile {
    pub fn from_certificate(cert: &EquilibriumCertificate) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            build: build_id(),
            alpha_cce: cert.alpha_cce,
            alpha_ce: cert.alpha_ce,
            per_player: cert
                .per_player
                .iter()
                .map(|r| PlayerRegretFile {
                    fixed: r.fixed,
                    swap: r.swap,
                })
                .collect(),
            mode: cert.mode.clone(),
            stderr: cert.stderr,
        }
    }
}

/// Decoder report: one entry per query; failed queries carry their error
/// message instead of poisoning the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderReportFile {
    pub schema: u32,
    pub build: String,
    pub alpha: f64,
    pub queries: Vec<DecodedQueryFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedQueryFile {
    pub index: usize,
    pub answer: Option<f64>,
    pub halfwidth: Option<f64>,
    pub levels_used: Option<u32>,
    pub true_value: Option<f64>,
    pub abs_error: Option<f64>,
    pub error: Option<String>,
}

/// Regret trace: `round, player, lambda, rho_fixed, rho_swap,
/// clamped_entries`, with the three functionals evaluated on the prefix of
/// true losses up to that round and clamp counts cumulative. The weighted
/// sums accumulate incrementally; each row renormalizes by its own prefix
/// length.
pub fn regret_trace_csv(run: &MechanismRun) -> String {
    let mut out = String::from("round,player,lambda,rho_fixed,rho_swap,clamped_entries\n");
    let k = run.k;
    for player in 0..run.n {
        let seq = &run.sequences[player];
        let losses = &run.true_losses[player];
        let mut sums = vec![vec![0.0_f64; k]; k];
        let mut clamp_acc = 0u64;
        for round in 1..=run.t as usize {
            let state = seq.played(round - 1);
            let row = losses.row(round - 1);
            for j in 0..k {
                let p = state.prob(j);
                if p == 0.0 {
                    continue;
                }
                for m in 0..k {
                    sums[j][m] += p * row[m];
                }
            }
            let inv = 1.0 / round as f64;
            let table: Vec<Vec<f64>> = sums
                .iter()
                .map(|r| r.iter().map(|&v| v * inv).collect())
                .collect();
            let lambda: f64 = (0..k).map(|j| table[j][j]).sum();
            let (rho_fixed, _) =
                crate::noregret::regret_from_table(&table, DeviationFamily::Fixed);
            let (rho_swap, _) =
                crate::noregret::regret_from_table(&table, DeviationFamily::Swap);
            clamp_acc += run
                .clamped
                .get(player)
                .and_then(|c| c.get(round - 1))
                .map(|&c| u64::from(c))
                .unwrap_or(0);
            out.push_str(&format!(
                "{round},{player},{lambda:.12},{rho_fixed:.12},{rho_swap:.12},{clamp_acc}\n"
            ));
        }
    }
    out
}

/// Audit report artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReportFile {
    pub schema: u32,
    pub build: String,
    pub mechanism: String,
    pub trials: usize,
    pub discarded: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub measured_alpha_mean: f64,
    pub eta_claimed: f64,
    pub max_deviation_gain: f64,
    pub stderr: f64,
    pub swap_gain_mean: f64,
    pub swap_gain_stderr: f64,
    pub optout_gain_mean: f64,
    pub optout_gain_stderr: f64,
    pub passed: bool,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub mechanism: String,
    pub feasible: bool,
    pub t: Option<u64>,
    pub sigma: Option<f64>,
    pub per_step_epsilon: Option<f64>,
    pub alpha_mm: Option<f64>,
    pub predicted_alpha: Option<f64>,
    pub composed_epsilon: Option<f64>,
    pub composed_delta: Option<f64>,
    pub eta_envelope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub schema: u32,
    pub n: usize,
    pub k: usize,
    pub u: usize,
    pub gamma: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
    pub rows: Vec<BoundsRow>,
}
