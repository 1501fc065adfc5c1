//! Subcommand dispatch behind the `adpp` binary: five subcommands covering
//! the baseline LP, Monte Carlo simulation, trace analysis, bound
//! verification, and the bundled reference experiment. All numerics live in
//! the sibling modules; this one merges flags into a [`RunConfig`],
//! dispatches, and formats output.
//!
//! Exit codes: 0 success, 1 invalid usage or configuration, 2 runtime
//! failure (including a verification that ran but found violated bounds).

use crate::analysis::{
    default_anchor_grid, detection_error_bound, divergence_series, empirical_tail,
    estimate_beta_one, pac_tail_bound, queues_at, time_average, zeta_delta, BoundVariant,
    MixingEstimate,
};
use crate::engine::detect_distribution;
use crate::harness::config::ProblemSource;
use crate::harness::output::{
    fmt_float, persist_ensemble, read_manifest, read_trace_csv, write_detection_csv,
    write_manifest, write_mixing_csv, write_pac_csv, write_xy_csv, DetectionRow, Manifest,
    PacComparisonRow,
};
use crate::harness::reproduce::blocking_parameter;
use crate::harness::runner::{run_ensemble, run_ensemble_lenient};
use crate::harness::{config_hash, load_config, reproduce_paper, Instance, RunConfig};
use crate::lp::{
    default_lipschitz_range, estimate_lipschitz, g_curve, solve_lp, theorem2_gap,
    LinearProgramInstance,
};
use crate::problem::{metric_entropy, nearest_member};
use crate::strategy::build_reward_matrix;
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "adpp",
    version,
    about = "Approximate drift-plus-penalty simulator with LP baseline and bound analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario name (e.g. "paper-sec4"); replaces any problem
    /// from --config.
    #[arg(long)]
    scenario: Option<String>,
    /// Ensemble size R.
    #[arg(long)]
    runs: Option<usize>,
    /// Master seed (per-run seeds are derived from it).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default "adpp-out").
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated drift-penalty weights, e.g. --v-list 5,50.
    #[arg(long, value_delimiter = ',')]
    v_list: Option<Vec<f64>>,
    /// Bound reading to evaluate: "printed" or "hoeffding".
    #[arg(long)]
    bound_variant: Option<String>,
    /// Comma-separated lags for mixing estimation, e.g. --lags 1,5,10,50.
    #[arg(long, value_delimiter = ',')]
    lags: Option<Vec<usize>>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the baseline LP under the limit distribution and report the
    /// relaxation analysis.
    SolveBaseline(CommonArgs),
    /// Run a Monte Carlo ensemble; persist trace.csv and manifest.json.
    Simulate(CommonArgs),
    /// Estimate mixing coefficients and tail bounds from stored traces.
    Analyze(AnalyzeArgs),
    /// Run an ensemble and check the stated bounds against empirical
    /// frequencies; exits 2 if any checked bound is violated.
    VerifyBounds(CommonArgs),
    /// Emit the reference experiment: LP optimum, relaxation curve, per-V
    /// utility/power curves, and bound ledgers.
    ReproducePaper(CommonArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Directory holding trace.csv (default: the --out directory).
    #[arg(long)]
    traces: Option<PathBuf>,
}

/// Parses `argv` (including the program name), runs the chosen subcommand,
/// and returns the process exit code: 0 success, 1 validation or usage
/// error, 2 runtime failure.
pub fn cli_dispatch<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::SolveBaseline(args) => solve_baseline(args),
        Command::Simulate(args) => simulate(args),
        Command::Analyze(args) => analyze(args),
        Command::VerifyBounds(args) => verify_bounds(args),
        Command::ReproducePaper(args) => reproduce(args),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            classify(&err)
        }
    }
}

/// 1 for bad input (usage, config, parameters), 2 for failures at runtime.
fn classify(err: &anyhow::Error) -> u8 {
    use crate::Error::*;
    match err.downcast_ref::<crate::Error>() {
        Some(
            ConfigViolations(_) | InvalidArgument(_) | InvalidDistribution(_)
            | DimensionMismatch(_) | IndexOutOfRange(_) | EmptyCover | HorizonExceeded { .. }
            | StrategyCapExceeded { .. } | StrategyCountOverflow | OracleCapExceeded { .. }
            | InsufficientRuns { .. } | EpsilonBelowMeanGap { .. } | MixingTooSlow { .. }
            | ZeroMassMember { .. } | Json(_),
        ) => 1,
        _ => 2,
    }
}

/// Flags override config fields; a problem file referenced relatively is
/// re-anchored to the config's directory so later stages can resolve it
/// from anywhere.
fn merged_config(args: &CommonArgs) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => load_config(path).map_err(|e| match e {
            // An unreadable or unparseable config is a usage problem
            // (exit 1), not a runtime failure.
            crate::Error::Io(io) => crate::Error::ConfigViolations(vec![format!(
                "cannot read {}: {io}",
                path.display()
            )]),
            crate::Error::Json(e) => crate::Error::ConfigViolations(vec![format!(
                "{}: {e}",
                path.display()
            )]),
            other => other,
        })?,
        None => RunConfig::paper_sec4(),
    };
    if let (Some(path), Some(ProblemSource::Path(rel))) = (&args.config, &config.problem) {
        if rel.is_relative() {
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            config.problem = Some(ProblemSource::Path(base.join(rel)));
        }
    }
    if let Some(name) = &args.scenario {
        config.scenario = Some(name.clone());
        config.problem = None;
    }
    if let Some(runs) = args.runs {
        config.runs = runs;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.out = Some(out.clone());
    }
    if let Some(v_list) = &args.v_list {
        config.v_list = Some(v_list.clone());
    }
    if let Some(variant) = &args.bound_variant {
        config.bound_variant = variant.clone();
    }
    Ok(config)
}

fn instance_of(config: &RunConfig) -> Result<Instance> {
    Ok(config.instantiate(Path::new("."))?)
}

fn out_dir(config: &RunConfig) -> PathBuf {
    config.out.clone().unwrap_or_else(|| PathBuf::from("adpp-out"))
}

fn solve_baseline(args: CommonArgs) -> Result<()> {
    let config = merged_config(&args)?;
    let instance = instance_of(&config)?;
    let started = Instant::now();
    let table = build_reward_matrix(instance.schedule.limit(), &instance.spec)?;
    let lp = LinearProgramInstance::from_table(&table, &instance.spec.constraints, 0.0)?;
    let solution = solve_lp(&lp)?;
    if !solution.is_optimal() {
        bail!("baseline LP: {:?}", solution.status);
    }
    println!(
        "scenario {}: F = {} strategies, K = {} constraints",
        instance.label,
        table.count(),
        instance.spec.penalty_count
    );
    println!("optimal cost: {}", fmt_float(solution.value));
    println!("optimal utility: {}", fmt_float(-solution.value));
    for m in solution.support() {
        println!("  theta[{m}] = {}", fmt_float(solution.theta[m]));
    }
    let x_max = default_lipschitz_range(&table, &instance.spec.constraints);
    let c_hat = estimate_lipschitz(&table, &instance.spec.constraints, x_max, 64)?;
    let (i_star, d) = nearest_member(&instance.cover, instance.schedule.limit())?;
    let b_max = (0..=instance.spec.penalty_count)
        .map(|k| instance.spec.b_max(k))
        .fold(0.0, f64::max);
    println!("relaxation range [0, {}], Lipschitz c_hat = {}", fmt_float(x_max), fmt_float(c_hat));
    println!(
        "nearest member i* = {i_star} at distance {}, approximation gap = {}",
        fmt_float(d),
        fmt_float(theorem2_gap(d, instance.nu, b_max, c_hat))
    );
    eprintln!("elapsed: {:.2?}", started.elapsed());
    if let Some(dir) = &config.out {
        std::fs::create_dir_all(dir)?;
        let mut manifest = Manifest::new(&config, 0);
        manifest.runs_completed = 0;
        let rows = write_xy_csv(
            &dir.join("lp_optimum.csv"),
            "cost",
            "utility",
            &[solution.value],
            &[-solution.value],
        )?;
        manifest.add_file("lp_optimum.csv", rows);
        let curve = g_curve(&table, &instance.spec.constraints, x_max, 64)?;
        let xs: Vec<f64> = curve.iter().map(|&(x, _)| x).collect();
        let gs: Vec<f64> = curve.iter().map(|&(_, g)| g).collect();
        let rows = write_xy_csv(&dir.join("g_curve.csv"), "x", "g_value", &xs, &gs)?;
        manifest.add_file("g_curve.csv", rows);
        write_manifest(dir, &manifest)?;
        println!("wrote lp_optimum.csv, g_curve.csv to {}", dir.display());
    }
    Ok(())
}

fn simulate(args: CommonArgs) -> Result<()> {
    let config = merged_config(&args)?;
    let instance = instance_of(&config)?;
    let dir = out_dir(&config);
    eprintln!(
        "simulate: {} — R = {}, T = {}, V = {}, D = {}, w = {}, seed = {}, config {}",
        instance.label,
        instance.runs,
        instance.engine.horizon,
        instance.engine.v,
        instance.engine.delay,
        instance.engine.window,
        instance.engine.seed,
        config_hash(&config),
    );
    let outcome = run_ensemble_lenient(
        &instance.spec,
        &instance.schedule,
        &instance.cover,
        &instance.engine,
        instance.runs,
    )?;
    eprintln!(
        "completed {}/{} runs in {:.2?}",
        outcome.completed.len(),
        instance.runs,
        outcome.elapsed
    );
    let manifest = persist_ensemble(&dir, &config, instance.runs, &outcome)?;
    for file in &manifest.files {
        println!("{} ({} rows) -> {}", file.name, file.rows, dir.display());
    }
    if !manifest.complete {
        for failure in &manifest.failures {
            eprintln!("run {} failed: {}", failure.run, failure.error);
        }
        bail!("{} of {} runs failed; partial results persisted", manifest.failures.len(), instance.runs);
    }
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let config = merged_config(&args.common)?;
    let instance = instance_of(&config)?;
    let traces = args.traces.clone().unwrap_or_else(|| out_dir(&config));
    let ensemble = read_trace_csv(&traces.join("trace.csv"))
        .with_context(|| format!("reading traces from {}", traces.display()))?;
    if let Ok(manifest) = read_manifest(&traces) {
        if manifest.config_hash != config_hash(&config) {
            eprintln!(
                "note: trace manifest was written by config {}, analyzing under {}",
                manifest.config_hash,
                config_hash(&config)
            );
        }
        if !manifest.complete {
            eprintln!("note: manifest marks this ensemble as incomplete");
        }
    }
    let t = ensemble.horizon();
    let kk = ensemble.penalty_count();
    let lags = args.common.lags.clone().unwrap_or_else(|| vec![1, 5, 10, 50]);
    let max_lag = lags.iter().copied().max().unwrap_or(1);
    let warmup = (instance.engine.delay + instance.engine.window).min(t / 2);
    let anchors = default_anchor_grid(warmup, t, max_lag, 16);

    let mut estimates: Vec<MixingEstimate> = Vec::new();
    for k in 0..=kk {
        let est = estimate_beta_one(&ensemble, k, &lags, &anchors)?;
        for warning in &est.warnings {
            eprintln!("mixing k={k}: {warning}");
        }
        println!(
            "beta_hat[k={k}]: {}",
            est.lags
                .iter()
                .zip(&est.beta_hat)
                .map(|(lag, b)| format!("s={lag}: {b:.4}"))
                .collect::<Vec<_>>()
                .join(", ")
        );
        estimates.push(est);
    }

    // Tail bounds for the constrained penalties at a small threshold grid.
    let u_t = blocking_parameter(t);
    let beta_anchor = default_anchor_grid(warmup, t, u_t, 16);
    let mut pac_rows = Vec::new();
    for k in 1..=kk {
        let beta = estimate_beta_one(&ensemble, k, &[u_t], &beta_anchor)?.beta_hat[0];
        let c_k = instance.spec.constraints[k - 1];
        let mean_gap = time_average(&ensemble, k, t)?.mean - c_k;
        for epsilon in [0.02, 0.05, 0.1] {
            if epsilon < mean_gap {
                eprintln!(
                    "pac k={k} eps={epsilon}: below the empirical mean gap {mean_gap:.4}, skipped"
                );
                continue;
            }
            let bound = pac_tail_bound(
                epsilon,
                t,
                u_t,
                beta,
                instance.spec.u_max(k),
                mean_gap,
                instance.variant,
            )?;
            let empirical = empirical_tail(&ensemble, k, t, epsilon, c_k)?;
            pac_rows.push(PacComparisonRow { k, bound, empirical });
        }
    }

    std::fs::create_dir_all(&traces)?;
    let rows = write_mixing_csv(&traces.join("mixing.csv"), &estimates)?;
    println!("mixing.csv ({rows} rows) -> {}", traces.display());
    let rows = write_pac_csv(&traces.join("pac_bounds.csv"), &pac_rows)?;
    println!("pac_bounds.csv ({rows} rows) -> {}", traces.display());
    Ok(())
}

fn verify_bounds(args: CommonArgs) -> Result<()> {
    let config = merged_config(&args)?;
    let instance = instance_of(&config)?;
    let spec = &instance.spec;
    eprintln!(
        "verify-bounds: {} — R = {}, T = {}, V = {}",
        instance.label, instance.runs, instance.engine.horizon, instance.engine.v
    );
    let ensemble = run_ensemble(
        &instance.spec,
        &instance.schedule,
        &instance.cover,
        &instance.engine,
        instance.runs,
    )?;
    let t_final = ensemble.horizon();
    let delay = instance.engine.delay;
    let mut failed = false;

    // Sample-path queue bound at a few checkpoints, every run and constraint.
    let checkpoints: Vec<usize> = [100, 1000, t_final]
        .into_iter()
        .filter(|&t| t > delay && t <= t_final)
        .collect();
    let mut triples = 0usize;
    let mut violations = 0usize;
    for run in 0..ensemble.runs() {
        for &t in &checkpoints {
            let queues = queues_at(&ensemble, run, t, &spec.constraints, delay)?;
            for k in 1..=spec.penalty_count {
                let c_k = spec.constraints[k - 1];
                let sum: f64 = (0..t.saturating_sub(delay))
                    .map(|tau| ensemble.penalty(k, run, tau) - c_k)
                    .sum();
                let lhs = sum / t as f64;
                let slack = delay as f64 * (spec.bounds[k].1 - c_k).max(0.0) / t as f64;
                let rhs = queues[k - 1] / t as f64 + slack;
                triples += 1;
                if lhs > rhs + 1e-9 {
                    violations += 1;
                }
            }
        }
    }
    println!(
        "sample-path queue bound: {} — {violations} violations across {triples} (run, t, k) checks",
        if violations == 0 { "PASS" } else { "FAIL" }
    );
    failed |= violations > 0;

    // Detection error under the stationary truth vs both bound readings.
    let (i_star, _) = nearest_member(&instance.cover, instance.schedule.limit())?;
    let truth = &instance.cover.members()[i_star];
    let zeta = zeta_delta(&instance.cover);
    let entropy = metric_entropy(&instance.cover);
    let stationary = crate::problem::DistributionSchedule::new(
        truth.clone(),
        crate::problem::TransientRule::Stationary,
        2,
    )?;
    let d_tau = divergence_series(&stationary, &instance.cover, 0..1)?
        .d_tau
        .first()
        .copied();
    let trials = 2000;
    let mut rng = ChaCha8Rng::seed_from_u64(instance.engine.seed ^ 0xD7);
    let mut detection_rows = Vec::new();
    let mut detection_ok = true;
    for w in [10usize, 20, 40] {
        let mut errors = 0usize;
        for _ in 0..trials {
            let window: Vec<usize> = (0..w).map(|_| truth.sample_with(rng.gen())).collect();
            if detect_distribution(&window, &instance.cover)? != i_star {
                errors += 1;
            }
        }
        let empirical = errors as f64 / trials as f64;
        let printed = detection_error_bound(d_tau, w, zeta, entropy, BoundVariant::Printed);
        let hoeffding = detection_error_bound(d_tau, w, zeta, entropy, BoundVariant::Hoeffding);
        for bound in [printed.clipped, hoeffding.clipped] {
            if bound < 0.9 && empirical > bound {
                detection_ok = false;
            }
        }
        detection_rows.push(DetectionRow {
            window: w,
            trials,
            empirical,
            bound_printed: printed.clipped,
            bound_hoeffding: hoeffding.clipped,
        });
    }
    println!(
        "detection error vs bound: {} — {}",
        if detection_ok { "PASS" } else { "FAIL" },
        detection_rows
            .iter()
            .map(|r| format!("w={}: {:.4}", r.window, r.empirical))
            .collect::<Vec<_>>()
            .join(", ")
    );
    failed |= !detection_ok;

    // Tail-bound soundness wherever the clipped bound is informative.
    let u_t = blocking_parameter(t_final);
    let warmup = (delay + instance.engine.window).min(t_final / 2);
    let anchors = default_anchor_grid(warmup, t_final, u_t, 16);
    let mut pac_rows = Vec::new();
    let mut pac_violations = 0usize;
    for k in 1..=spec.penalty_count {
        let beta = estimate_beta_one(&ensemble, k, &[u_t], &anchors)?.beta_hat[0];
        let c_k = spec.constraints[k - 1];
        let mean_gap = time_average(&ensemble, k, t_final)?.mean - c_k;
        for epsilon in [0.02, 0.05, 0.1] {
            if epsilon < mean_gap {
                continue;
            }
            let bound = pac_tail_bound(
                epsilon,
                t_final,
                u_t,
                beta,
                spec.u_max(k),
                mean_gap,
                instance.variant,
            )?;
            let empirical = empirical_tail(&ensemble, k, t_final, epsilon, c_k)?;
            if bound.clipped < 0.9 && empirical > bound.clipped {
                pac_violations += 1;
            }
            pac_rows.push(PacComparisonRow { k, bound, empirical });
        }
    }
    println!(
        "tail bound soundness: {} — {pac_violations} violations across {} comparisons",
        if pac_violations == 0 { "PASS" } else { "FAIL" },
        pac_rows.len()
    );
    failed |= pac_violations > 0;

    if let Some(dir) = &config.out {
        std::fs::create_dir_all(dir)?;
        write_detection_csv(&dir.join("detection.csv"), &detection_rows)?;
        write_pac_csv(&dir.join("pac_bounds.csv"), &pac_rows)?;
        println!("wrote detection.csv, pac_bounds.csv to {}", dir.display());
    }
    if failed {
        bail!("one or more bound checks failed");
    }
    Ok(())
}

fn reproduce(args: CommonArgs) -> Result<()> {
    let config = merged_config(&args)?;
    let dir = out_dir(&config);
    let started = Instant::now();
    eprintln!(
        "reproduce-paper: V list {:?}, R = {}, T = {}, seed = {} -> {}",
        config.v_list.clone().unwrap_or_else(|| vec![5.0, 50.0]),
        config.runs,
        config.horizon,
        config.seed,
        dir.display()
    );
    let manifest = reproduce_paper(&dir, &config)?;
    for file in &manifest.files {
        println!("{} ({} rows)", file.name, file.rows);
    }
    eprintln!("elapsed: {:.2?}", started.elapsed());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dispatch(args: &[&str]) -> u8 {
        cli_dispatch(args.iter().copied())
    }

    #[test]
    fn help_and_version_exit_zero() {
        assert_eq!(dispatch(&["adpp", "--help"]), 0);
        assert_eq!(dispatch(&["adpp", "--version"]), 0);
        assert_eq!(dispatch(&["adpp", "simulate", "--help"]), 0);
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(dispatch(&["adpp"]), 1);
        assert_eq!(dispatch(&["adpp", "no-such-subcommand"]), 1);
        assert_eq!(dispatch(&["adpp", "simulate", "--bogus-flag"]), 1);
        assert_eq!(dispatch(&["adpp", "simulate", "--runs", "many"]), 1);
    }

    #[test]
    fn config_problems_exit_one() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("missing.json");
        assert_eq!(
            dispatch(&["adpp", "simulate", "--config", missing.to_str().unwrap()]),
            1
        );

        let malformed = dir.path().join("malformed.json");
        std::fs::write(&malformed, "{not json").unwrap();
        assert_eq!(
            dispatch(&["adpp", "simulate", "--config", malformed.to_str().unwrap()]),
            1
        );

        let invalid = dir.path().join("invalid.json");
        std::fs::write(&invalid, r#"{"schema_version":1,"v":-2,"window":0}"#).unwrap();
        assert_eq!(
            dispatch(&["adpp", "simulate", "--config", invalid.to_str().unwrap()]),
            1
        );
    }

    #[test]
    fn missing_traces_exit_two() {
        let dir = tempfile::tempdir().unwrap();
        let empty = dir.path().join("no-traces-here");
        assert_eq!(
            dispatch(&["adpp", "analyze", "--traces", empty.to_str().unwrap()]),
            2
        );
    }

    #[test]
    fn error_classification_covers_both_exit_classes() {
        let validation: anyhow::Error = crate::Error::InvalidArgument("x".into()).into();
        assert_eq!(classify(&validation), 1);
        let runtime: anyhow::Error = crate::Error::IterationCap(10).into();
        assert_eq!(classify(&runtime), 2);
        let io: anyhow::Error =
            crate::Error::Io(std::io::Error::new(std::io::ErrorKind::Other, "disk")).into();
        assert_eq!(classify(&io), 2);
        let foreign = anyhow::anyhow!("not a library error");
        assert_eq!(classify(&foreign), 2);
    }
}
