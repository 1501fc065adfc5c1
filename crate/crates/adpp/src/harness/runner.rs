//! Monte Carlo orchestration: per-run seed derivation, worker-pool caps, and
//! the lenient collection mode that keeps completed runs when one fails.

use crate::engine::{precompute_tables, run_episode, EngineConfig, SlotRecord};
use crate::error::{Error, Result};
use crate::analysis::TraceEnsemble;
use crate::problem::{CoveringSet, DistributionSchedule, ProblemSpec};
use rayon::prelude::*;
use std::time::{Duration, Instant};

/// Per-run seed from the master seed: the `run`-th output of a splitmix64
/// stream. Consecutive masters or consecutive runs never share a seed in
/// practice, and the mapping is stable across platforms and versions.
pub fn derive_seed(master: u64, run: u64) -> u64 {
    let mut z = master.wrapping_add((run + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Worker cap from `ADPP_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("ADPP_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
}

/// Runs `f` under a rayon pool capped by [`thread_cap`]; uses the global
/// pool when the variable is unset.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    match thread_cap() {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// What an ensemble execution produced, completed runs and casualties both.
#[derive(Debug)]
pub struct EnsembleOutcome {
    /// `(run index, records)` for every run that finished, in run order.
    pub completed: Vec<(usize, Vec<SlotRecord>)>,
    /// `(run index, error text)` for every run that did not.
    pub failures: Vec<(usize, String)>,
    pub elapsed: Duration,
}

/// Executes all `runs` episodes in parallel under derived seeds, collecting
/// failures instead of aborting, so partial results can still be persisted
/// with an honest manifest.
pub fn run_ensemble_lenient(
    spec: &ProblemSpec,
    schedule: &DistributionSchedule,
    cover: &CoveringSet,
    config: &EngineConfig,
    runs: usize,
) -> Result<EnsembleOutcome> {
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be ≥ 1".into()));
    }
    config.validate()?;
    let start = Instant::now();
    let tables = precompute_tables(spec, cover)?;
    let results: Vec<(usize, std::result::Result<Vec<SlotRecord>, String>)> = with_pool(|| {
        (0..runs)
            .into_par_iter()
            .map(|run| {
                let mut per_run = config.clone();
                per_run.seed = derive_seed(config.seed, run as u64);
                let outcome = run_episode(spec, schedule, cover, &tables, &per_run)
                    .map_err(|e| e.to_string());
                (run, outcome)
            })
            .collect()
    })?;
    let mut completed = Vec::with_capacity(runs);
    let mut failures = Vec::new();
    for (run, outcome) in results {
        match outcome {
            Ok(records) => completed.push((run, records)),
            Err(msg) => failures.push((run, msg)),
        }
    }
    Ok(EnsembleOutcome {
        completed,
        failures,
        elapsed: start.elapsed(),
    })
}

/// Strict ensemble execution: every run must succeed; returns the columnar
/// ensemble. `config.seed` is the master seed.
pub fn run_ensemble(
    spec: &ProblemSpec,
    schedule: &DistributionSchedule,
    cover: &CoveringSet,
    config: &EngineConfig,
    runs: usize,
) -> Result<TraceEnsemble> {
    let outcome = run_ensemble_lenient(spec, schedule, cover, config, runs)?;
    if let Some((run, msg)) = outcome.failures.into_iter().next() {
        return Err(Error::InvalidArgument(format!("run {run} failed: {msg}")));
    }
    TraceEnsemble::from_runs(outcome.completed.into_iter().map(|(_, r)| r).collect())
}
