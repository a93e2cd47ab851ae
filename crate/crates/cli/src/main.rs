//! Command-line front end: run mechanisms, verify equilibria, audit
//! incentives, execute the query-release reduction pipeline, and print the
//! bound calculators.
//!
//! Exit codes: 0 success, 2 parameters infeasible, 3 mechanism failure,
//! 1 anything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use priveq_core::audit::{audit, AuditMechanism, AuditParams, TypePrior};
use priveq_core::equilibrium::{verify, VerifyMode};
use priveq_core::error::Error;
use priveq_core::formats::{
    build_id, read_json, regret_trace_csv, write_json, AuditReportFile, BoundsReport, BoundsRow,
    CertificateFile, DecodedQueryFile, DecoderReportFile, DistributionFile, RunManifest,
    SCHEMA_VERSION,
};
use priveq_core::game::spec::GameSpecFile;
use priveq_core::game::Game;
use priveq_core::mech::{laplace, median, LearnerKind, MechanismRun};
use priveq_core::privacy::{
    self, median_accuracy_bound, plan_laplace_rounds, plan_median_rounds, predicted_alpha_laplace,
    predicted_alpha_median, PlanOutcome, PrivacyBudget,
};
use priveq_core::rng::{stream, StreamKind};
use priveq_core::suite::build_game;
use priveq_core::suite::lowerbound::{
    decode_answers, planted_distribution, LowerBoundGame, SubsetSumFile,
};

#[derive(Parser)]
#[command(name = "priveq", version, about = "Private correlated equilibria of large games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a mechanism end to end and write manifest, trace, distribution,
    /// and certificate artifacts.
    Run(RunArgs),
    /// Verify a stored distribution against a game.
    Verify(VerifyArgs),
    /// Monte Carlo incentive audit of a recommender mechanism.
    Audit(AuditArgs),
    /// Subset-sum query release through equilibrium computation.
    Lowerbound(LowerboundArgs),
    /// Print the accuracy/privacy bound calculators.
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value = "swap")]
    learner: String,
    #[arg(long, default_value = "laplace")]
    mechanism: String,
    /// Round count: "auto" solves the mechanism's constraint.
    #[arg(long, default_value = "auto")]
    t: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Optional type-universe declaration to validate against the family.
    #[arg(long)]
    type_universe: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    dist: PathBuf,
    #[arg(long)]
    game: PathBuf,
    #[arg(long, default_value = "exact")]
    mode: String,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, default_value = "beach")]
    game_family: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    prior: String,
    #[arg(long)]
    mechanism: String,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    #[arg(long, default_value = "swap")]
    learner: String,
    #[arg(long)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    t: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LowerboundArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    alpha: f64,
    /// Plant the exact equilibrium instead of running a mechanism.
    #[arg(long)]
    planted: bool,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    #[arg(long, default_value = "swap")]
    learner: String,
    #[arg(long)]
    t: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    u: usize,
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    t: Option<u64>,
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Audit(args) => cmd_audit(&args),
        Command::Lowerbound(args) => cmd_lowerbound(&args),
        Command::Bounds(args) => cmd_bounds(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<Error>() {
                Some(Error::Infeasible { .. }) => ExitCode::from(2),
                Some(Error::MechanismFailure { .. }) => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn load_game(path: &Path) -> anyhow::Result<(GameSpecFile, Box<dyn Game>)> {
    let spec = GameSpecFile::load(path)?;
    let game = build_game(&spec)?;
    Ok((spec, game))
}

fn cmd_run(args: &RunArgs) -> anyhow::Result<ExitCode> {
    let (spec, game) = load_game(&args.game)?;
    if let Some(universe_path) = &args.type_universe {
        validate_type_universe(universe_path, game.as_ref())?;
    }
    let learner = LearnerKind::parse(&args.learner)?;
    let budget = PrivacyBudget::joint(args.epsilon, args.delta)?;
    let t_override = parse_t(&args.t)?;
    std::fs::create_dir_all(&args.out)?;
    // The output directory is deliberately not part of the run identity.
    let config = json!({
        "schema": SCHEMA_VERSION,
        "game": spec,
        "mechanism": args.mechanism,
        "learner": args.learner,
        "epsilon": args.epsilon,
        "delta": args.delta,
        "beta": args.beta,
        "t": args.t,
        "seed": args.seed,
    });

    let (run, mut manifest, failed) = match args.mechanism.as_str() {
        "laplace" => {
            let mut params = laplace::LaplaceParams::new(budget, args.beta, learner, args.seed);
            params.t_override = t_override;
            let run = laplace::run(game.as_ref(), &params)?;
            if t_override.is_some() && !run.constraint_satisfied {
                eprintln!(
                    "warning: explicit T={} violates the round-count constraint at these parameters",
                    run.t
                );
            }
            let manifest = RunManifest::for_laplace(
                &run,
                args.beta,
                game.declared_sensitivity(),
                learner.label(),
            );
            (run, manifest, false)
        }
        "median" => {
            let mut params = median::MedianParams::new(budget, args.beta, learner, args.seed);
            params.t_override = t_override;
            let out = median::run(game.as_ref(), &params)?;
            let manifest = RunManifest::for_median(
                &out,
                args.epsilon,
                args.beta,
                game.declared_sensitivity(),
                learner.label(),
            );
            let failed = matches!(out.status, median::MedianStatus::Failure { .. });
            (out.run, manifest, failed)
        }
        other => anyhow::bail!("unknown mechanism {other:?}"),
    };
    manifest.config = config;
    write_json(&args.out.join("manifest.json"), &manifest)?;
    if failed {
        eprintln!("mechanism failure: see manifest");
        return Ok(ExitCode::from(3));
    }
    write_artifacts(&args.out, &run, game.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn write_artifacts(out: &Path, run: &MechanismRun, game: &dyn Game) -> anyhow::Result<()> {
    std::fs::write(out.join("trace.csv"), regret_trace_csv(run))?;
    let dist = run.distribution();
    write_json(
        &out.join("distribution.json"),
        &DistributionFile::from_distribution(&dist),
    )?;
    let cert = verify(&dist, game, VerifyMode::Exact, None)?;
    write_json(
        &out.join("certificate.json"),
        &CertificateFile::from_certificate(&cert),
    )?;
    Ok(())
}

fn validate_type_universe(path: &Path, game: &dyn Game) -> anyhow::Result<()> {
    #[derive(serde::Deserialize)]
    struct UniverseFile {
        types: Vec<String>,
    }
    let u: UniverseFile = read_json(path)?;
    let declared = game.type_universe_size();
    if u.types.len() != declared {
        anyhow::bail!(
            "type universe file lists {} types, family declares {declared}",
            u.types.len()
        );
    }
    for (i, name) in u.types.iter().enumerate() {
        let family_name = game.type_name(priveq_core::game::PlayerType(i as u32));
        if *name != family_name {
            anyhow::bail!("type {i} named {name:?}, family says {family_name:?}");
        }
    }
    Ok(())
}

fn parse_t(s: &str) -> anyhow::Result<Option<u64>> {
    if s == "auto" {
        Ok(None)
    } else {
        Ok(Some(s.parse()?))
    }
}

fn cmd_verify(args: &VerifyArgs) -> anyhow::Result<ExitCode> {
    let (_, game) = load_game(&args.game)?;
    let dist_file: DistributionFile = read_json(&args.dist)?;
    let dist = dist_file.into_distribution()?;
    let mode = match args.mode.as_str() {
        "exact" => VerifyMode::Exact,
        "mc" | "monte_carlo" => VerifyMode::MonteCarlo {
            samples: args.samples,
        },
        other => anyhow::bail!("unknown verify mode {other:?}"),
    };
    let mut rng = stream(args.seed, StreamKind::Aux, 0);
    let cert = verify(&dist, game.as_ref(), mode, Some(&mut rng))?;
    let file = CertificateFile::from_certificate(&cert);
    match &args.out {
        Some(path) => write_json(path, &file)?,
        None => println!("{}", serde_json::to_string_pretty(&file)?),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_audit(args: &AuditArgs) -> anyhow::Result<ExitCode> {
    let template: Box<dyn Game> = match args.game_family.as_str() {
        "beach" => Box::new(priveq_core::suite::beach::BeachMountainGame::new(vec![
            priveq_core::suite::beach::BEACH_TYPE;
            args.n
        ])?),
        other => anyhow::bail!("unknown audit family {other:?}"),
    };
    let prior = TypePrior::parse(&args.prior)?;
    let params = AuditParams {
        mechanism: AuditMechanism::parse(&args.mechanism)?,
        epsilon: args.epsilon,
        delta: args.delta,
        beta: args.beta,
        learner: LearnerKind::parse(&args.learner)?,
        trials: args.trials,
        seed: args.seed,
        t_override: args.t,
    };
    let report = audit(template.as_ref(), &prior, &params)?;
    let discard_limit = args.beta + 0.02;
    let discard_rate = report.discarded as f64 / args.trials as f64;
    if discard_rate > discard_limit {
        eprintln!(
            "warning: discard rate {discard_rate:.3} above beta + 0.02 = {discard_limit:.3}"
        );
    }
    let file = AuditReportFile {
        schema: SCHEMA_VERSION,
        build: build_id(),
        mechanism: report.mechanism.label().into(),
        trials: report.trials_used,
        discarded: report.discarded,
        epsilon: args.epsilon,
        delta: args.delta,
        measured_alpha_mean: report.measured_alpha_mean,
        eta_claimed: report.eta_claimed,
        max_deviation_gain: report.max_deviation_gain,
        stderr: report.stderr,
        swap_gain_mean: report.swap_gain.mean,
        swap_gain_stderr: report.swap_gain.stderr,
        optout_gain_mean: report.optout_gain.mean,
        optout_gain_stderr: report.optout_gain.stderr,
        passed: report.passes(),
        config: json!({
            "game_family": args.game_family,
            "n": args.n,
            "prior": args.prior,
            "trials": args.trials,
            "seed": args.seed,
            "t": args.t,
            "learner": args.learner,
        }),
    };
    match &args.out {
        Some(path) => write_json(path, &file)?,
        None => println!("{}", serde_json::to_string_pretty(&file)?),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_lowerbound(args: &LowerboundArgs) -> anyhow::Result<ExitCode> {
    let file: SubsetSumFile = read_json(&args.instance)?;
    if file.queries.is_empty() {
        let report = DecoderReportFile {
            schema: SCHEMA_VERSION,
            build: build_id(),
            alpha: args.alpha,
            queries: vec![],
        };
        emit_decoder_report(&report, args.out.as_deref())?;
        return Ok(ExitCode::SUCCESS);
    }
    let instance = file.into_instance()?;
    let game = LowerBoundGame::new(instance)?;
    let (dist, alpha) = if args.planted {
        (planted_distribution(&game), args.alpha)
    } else {
        // Mechanism mode: decode margins come from the measured certificate,
        // chaining the equilibrium guarantee into the decoder's.
        let budget = PrivacyBudget::joint(args.epsilon, args.delta)?;
        let mut params = laplace::LaplaceParams::new(
            budget,
            args.beta,
            LearnerKind::parse(&args.learner)?,
            args.seed,
        );
        params.t_override = args.t;
        let run = laplace::run(&game, &params)?;
        let dist = run.distribution();
        let cert = verify(
            &dist,
            &game,
            VerifyMode::MonteCarlo { samples: 20_000 },
            Some(&mut stream(args.seed, StreamKind::Aux, 1)),
        )?;
        (dist, cert.alpha_cce.abs().max(args.alpha))
    };
    let decoded = decode_answers(&game, &dist, alpha);
    let queries = decoded
        .into_iter()
        .enumerate()
        .map(|(index, result)| {
            let truth = game.instance().true_answer(index);
            match result {
                Ok(d) => DecodedQueryFile {
                    index,
                    answer: Some(d.answer),
                    halfwidth: Some(d.halfwidth),
                    levels_used: Some(d.levels_used),
                    true_value: Some(truth),
                    abs_error: Some((d.answer - truth).abs()),
                    error: None,
                },
                Err(e) => DecodedQueryFile {
                    index,
                    answer: None,
                    halfwidth: None,
                    levels_used: None,
                    true_value: Some(truth),
                    abs_error: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let report = DecoderReportFile {
        schema: SCHEMA_VERSION,
        build: build_id(),
        alpha,
        queries,
    };
    emit_decoder_report(&report, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn emit_decoder_report(report: &DecoderReportFile, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => write_json(path, report)?,
        None => println!("{}", serde_json::to_string_pretty(report)?),
    }
    Ok(())
}

fn empty_row(mechanism: &str) -> BoundsRow {
    BoundsRow {
        mechanism: mechanism.into(),
        feasible: false,
        t: None,
        sigma: None,
        per_step_epsilon: None,
        alpha_mm: None,
        predicted_alpha: None,
        composed_epsilon: None,
        composed_delta: None,
        eta_envelope: None,
    }
}

fn cmd_bounds(args: &BoundsArgs) -> anyhow::Result<ExitCode> {
    let (n, k, u) = (args.n, args.k, args.u);
    let (gamma, eps, delta, beta) = (args.gamma, args.epsilon, args.delta, args.beta);
    let params_valid = eps > 0.0 && delta > 0.0 && delta < 1.0 && beta > 0.0 && beta < 1.0;
    let mut rows = Vec::new();

    if !params_valid {
        rows.push(empty_row("laplace"));
        rows.push(empty_row("median"));
    } else {
        let plan = plan_laplace_rounds(n, k, gamma, eps, delta, beta, laplace::DEFAULT_T_CAP)?;
        let t = match (args.t, &plan) {
            (Some(t), _) => Some(t),
            (None, PlanOutcome::Feasible(p)) => Some(p.t),
            (None, PlanOutcome::Infeasible { .. }) => {
                privacy::laplace_accuracy_target_t(n, k, gamma)
                    .map(|t| t.min(laplace::DEFAULT_T_CAP))
            }
        };
        rows.push(match t {
            None => BoundsRow {
                eta_envelope: Some(privacy::eta_envelope_laplace(n, k, gamma, delta, beta)),
                ..empty_row("laplace")
            },
            Some(t) => {
                let sigma = privacy::laplace_noise_scale(n, k, t, gamma, eps, delta);
                let steps = (n * k) as u64 * t;
                let per_step = privacy::per_step_epsilon(eps, delta, steps);
                let composed = per_step * (8.0 * steps as f64 * (1.0 / delta).ln()).sqrt();
                BoundsRow {
                    mechanism: "laplace".into(),
                    feasible: matches!(plan, PlanOutcome::Feasible(_)),
                    t: Some(t),
                    sigma: Some(sigma),
                    per_step_epsilon: Some(per_step),
                    alpha_mm: None,
                    predicted_alpha: Some(predicted_alpha_laplace(
                        n, k, t, gamma, eps, delta, beta,
                    )),
                    composed_epsilon: Some(composed),
                    composed_delta: Some(delta),
                    eta_envelope: Some(privacy::eta_envelope_laplace(n, k, gamma, delta, beta)),
                }
            }
        });

        rows.push(
            match plan_median_rounds(n, u, k, gamma, eps, delta, beta, laplace::DEFAULT_T_CAP)? {
                PlanOutcome::Feasible(plan) => {
                    let t = args.t.unwrap_or(plan.t);
                    BoundsRow {
                        mechanism: "median".into(),
                        feasible: true,
                        t: Some(t),
                        sigma: None,
                        per_step_epsilon: None,
                        alpha_mm: Some(median_accuracy_bound(
                            n, u, k, t, gamma, eps, delta, beta,
                        )),
                        predicted_alpha: Some(predicted_alpha_median(
                            n, u, k, t, gamma, eps, delta, beta,
                        )),
                        composed_epsilon: Some(eps),
                        composed_delta: Some(delta),
                        eta_envelope: None,
                    }
                }
                PlanOutcome::Infeasible { .. } => empty_row("median"),
            },
        );
    }

    let report = BoundsReport {
        schema: SCHEMA_VERSION,
        n,
        k,
        u,
        gamma,
        epsilon: eps,
        delta,
        beta,
        rows,
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print_bounds_table(&report);
    }
    Ok(ExitCode::SUCCESS)
}

/// Table and JSON render the same f64 values through the same serializer,
/// so the numbers are identical in both outputs.
fn print_bounds_table(report: &BoundsReport) {
    println!(
        "n={} k={} u={} gamma={} epsilon={} delta={} beta={}",
        report.n, report.k, report.u, report.gamma, report.epsilon, report.delta, report.beta
    );
    let fmt = |v: Option<f64>| {
        v.map(|x| serde_json::to_string(&x).expect("float serializes"))
            .unwrap_or_else(|| "-".into())
    };
    let fmt_t = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_else(|| "-".into());
    println!("mechanism | feasible | T | sigma | per_step_epsilon | alpha_mm | predicted_alpha | composed_epsilon | composed_delta | eta_envelope");
    for row in &report.rows {
        println!(
            "{} | {} | {} | {} | {} | {} | {} | {} | {} | {}",
            row.mechanism,
            if row.feasible { "yes" } else { "infeasible" },
            fmt_t(row.t),
            fmt(row.sigma),
            fmt(row.per_step_epsilon),
            fmt(row.alpha_mm),
            fmt(row.predicted_alpha),
            fmt(row.composed_epsilon),
            fmt(row.composed_delta),
            fmt(row.eta_envelope),
        );
    }
}
