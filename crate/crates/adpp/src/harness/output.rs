//! CSV and manifest emission, plus trace re-ingestion.
//!
//! Every float is written as `{:.11e}` — 12 significant digits — which makes
//! output files byte-identical across platforms for identical inputs, and
//! makes write → read → write a fixed point (12 decimal digits survive the
//! f64 round trip exactly). Files are RFC-4180: comma-separated, one header
//! row, `\n` line endings. Every emitted file lands in the manifest with its
//! data row count and the hash of the generating config.

use crate::analysis::{BoundReport, MixingEstimate, PacBound, TraceEnsemble};
use crate::engine::SlotRecord;
use crate::error::{Error, Result};
use crate::harness::config::{RunConfig, SCHEMA_VERSION};
use crate::harness::runner::EnsembleOutcome;
use serde::{Deserialize, Serialize};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

/// The crate-wide float formatting contract: 12 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.11e}")
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Stable hash of the config that produced a run, independent of where the
/// output happens to be written.
pub fn config_hash(config: &RunConfig) -> String {
    let mut canonical = config.clone();
    canonical.out = None;
    let text = serde_json::to_string(&canonical).expect("config serializes");
    format!("{:016x}", fnv1a64(text.as_bytes()))
}

/// One emitted file: name relative to the output directory and its data row
/// count (header excluded).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: usize,
    pub error: String,
}

/// What a run left behind. `complete` is false whenever any requested run is
/// missing, so downstream consumers can refuse partial ensembles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub master_seed: u64,
    pub runs_requested: usize,
    pub runs_completed: usize,
    pub complete: bool,
    pub files: Vec<FileEntry>,
    pub failures: Vec<RunFailure>,
}

impl Manifest {
    pub fn new(config: &RunConfig, runs_requested: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config_hash: config_hash(config),
            master_seed: config.seed,
            runs_requested,
            runs_completed: runs_requested,
            complete: true,
            files: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn add_file(&mut self, name: &str, rows: usize) {
        self.files.push(FileEntry {
            name: name.into(),
            rows,
        });
    }
}

/// Writes `manifest.json` into `dir`.
pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<PathBuf> {
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(dir.join("manifest.json"))?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes completed runs as `run,t,state,j_star,m_star,p_0..p_K,q_1..q_K`.
/// The `run` column keeps the original run indices so rows stay attributable
/// to their derived seeds even when some runs failed. Returns the data row
/// count.
pub fn write_trace_csv(path: &Path, completed: &[(usize, Vec<SlotRecord>)]) -> Result<usize> {
    let Some((_, first)) = completed.first() else {
        return Err(Error::InvalidArgument("no completed runs to persist".into()));
    };
    let Some(first_rec) = first.first() else {
        return Err(Error::InvalidArgument("a completed run has no slots".into()));
    };
    let k = first_rec.queues.len();
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "run,t,state,j_star,m_star")?;
    for i in 0..=k {
        write!(out, ",p_{i}")?;
    }
    for i in 1..=k {
        write!(out, ",q_{i}")?;
    }
    writeln!(out)?;
    let mut rows = 0;
    for (run, records) in completed {
        for rec in records {
            write!(
                out,
                "{run},{},{},{},{}",
                rec.t, rec.state, rec.detected, rec.strategy
            )?;
            for p in &rec.penalties {
                write!(out, ",{}", fmt_float(*p))?;
            }
            for q in &rec.queues {
                write!(out, ",{}", fmt_float(*q))?;
            }
            writeln!(out)?;
            rows += 1;
        }
    }
    out.flush()?;
    Ok(rows)
}

/// Reads a trace file back into a columnar ensemble. Rows must be grouped by
/// strictly increasing run id with slots counting up from 0 — exactly the
/// order [`write_trace_csv`] produces.
pub fn read_trace_csv(path: &Path) -> Result<TraceEnsemble> {
    let err = |line: usize, msg: String| Error::TraceParse {
        path: path.display().to_string(),
        line,
        msg,
    };
    let file = File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| err(1, "empty trace file".into()))??;
    let cols: Vec<&str> = header.trim_end().split(',').collect();
    let fixed = ["run", "t", "state", "j_star", "m_star"];
    if cols.len() < 6 || cols[..5] != fixed || (cols.len() - 5) % 2 == 0 {
        return Err(err(1, format!("unrecognized trace header {header:?}")));
    }
    let k = (cols.len() - 5 - 1) / 2;
    for i in 0..=k {
        if cols[5 + i] != format!("p_{i}") {
            return Err(err(1, format!("expected column p_{i}, found {:?}", cols[5 + i])));
        }
    }
    for i in 1..=k {
        if cols[5 + k + i] != format!("q_{i}") {
            return Err(err(1, format!("expected column q_{i}, found {:?}", cols[5 + k + i])));
        }
    }

    let mut runs: Vec<Vec<SlotRecord>> = Vec::new();
    let mut last_run: Option<usize> = None;
    for (no, line) in lines.enumerate() {
        let lineno = no + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(err(
                lineno,
                format!("{} fields, header has {}", fields.len(), cols.len()),
            ));
        }
        let int = |idx: usize| -> Result<u64> {
            fields[idx]
                .parse::<u64>()
                .map_err(|e| err(lineno, format!("column {:?}: {e}", cols[idx])))
        };
        let float = |idx: usize| -> Result<f64> {
            fields[idx]
                .parse::<f64>()
                .map_err(|e| err(lineno, format!("column {:?}: {e}", cols[idx])))
        };
        let run = int(0)? as usize;
        let t = int(1)? as usize;
        let rec = SlotRecord {
            t,
            state: int(2)? as usize,
            detected: int(3)? as usize,
            strategy: int(4)?,
            penalties: (0..=k).map(|i| float(5 + i)).collect::<Result<_>>()?,
            queues: (1..=k).map(|i| float(5 + k + i)).collect::<Result<_>>()?,
        };
        if last_run == Some(run) {
            let expected = runs.last().map_or(0, Vec::len);
            if t != expected {
                return Err(err(lineno, format!("run {run}: expected slot {expected}, found {t}")));
            }
            runs.last_mut().expect("group exists").push(rec);
        } else {
            if let Some(prev) = last_run {
                if run <= prev {
                    return Err(err(
                        lineno,
                        format!("run ids must be grouped and increasing ({run} after {prev})"),
                    ));
                }
            }
            if t != 0 {
                return Err(err(lineno, format!("run {run} must start at slot 0, found {t}")));
            }
            runs.push(vec![rec]);
            last_run = Some(run);
        }
    }
    TraceEnsemble::from_runs(runs)
}

/// Writes slot-indexed series: header `t,<names...>`, one row per slot.
pub fn write_series_csv(path: &Path, names: &[&str], columns: &[&[f64]]) -> Result<usize> {
    if names.len() != columns.len() || columns.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} series names for {} columns",
            names.len(),
            columns.len()
        )));
    }
    let rows = columns[0].len();
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::DimensionMismatch("series columns differ in length".into()));
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "t,{}", names.join(","))?;
    for t in 0..rows {
        write!(out, "{t}")?;
        for col in columns {
            write!(out, ",{}", fmt_float(col[t]))?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(rows)
}

/// Writes a two-column float table, e.g. the relaxation curve `G(x)`.
pub fn write_xy_csv(
    path: &Path,
    x_name: &str,
    y_name: &str,
    xs: &[f64],
    ys: &[f64],
) -> Result<usize> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} x values for {} y values",
            xs.len(),
            ys.len()
        )));
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{x_name},{y_name}")?;
    for (x, y) in xs.iter().zip(ys) {
        writeln!(out, "{},{}", fmt_float(*x), fmt_float(*y))?;
    }
    out.flush()?;
    Ok(xs.len())
}

/// Writes mixing curves as `k,lag,beta_hat` rows.
pub fn write_mixing_csv(path: &Path, estimates: &[MixingEstimate]) -> Result<usize> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "k,lag,beta_hat")?;
    let mut rows = 0;
    for est in estimates {
        for (lag, beta) in est.lags.iter().zip(&est.beta_hat) {
            writeln!(out, "{},{lag},{}", est.penalty_index, fmt_float(*beta))?;
            rows += 1;
        }
    }
    out.flush()?;
    Ok(rows)
}

/// A tail bound next to the frequency it is supposed to dominate.
#[derive(Debug, Clone)]
pub struct PacComparisonRow {
    pub k: usize,
    pub bound: PacBound,
    pub empirical: f64,
}

/// Writes `k,epsilon,u_t,v_t,raw,clipped,empirical` rows.
pub fn write_pac_csv(path: &Path, rows: &[PacComparisonRow]) -> Result<usize> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "k,epsilon,u_t,v_t,raw,clipped,empirical")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.k,
            fmt_float(row.bound.epsilon),
            row.bound.u_t,
            row.bound.v_t,
            fmt_float(row.bound.raw),
            fmt_float(row.bound.clipped),
            fmt_float(row.empirical),
        )?;
    }
    out.flush()?;
    Ok(rows.len())
}

/// One detection-error measurement against both bound variants.
#[derive(Debug, Clone)]
pub struct DetectionRow {
    pub window: usize,
    pub trials: usize,
    pub empirical: f64,
    pub bound_printed: f64,
    pub bound_hoeffding: f64,
}

pub fn write_detection_csv(path: &Path, rows: &[DetectionRow]) -> Result<usize> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "window,trials,empirical,bound_printed,bound_hoeffding")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.window,
            row.trials,
            fmt_float(row.empirical),
            fmt_float(row.bound_printed),
            fmt_float(row.bound_hoeffding),
        )?;
    }
    out.flush()?;
    Ok(rows.len())
}

/// Writes the bound ledger as `quantity,value` rows: every scalar field,
/// one `part_b_bound_k` row per constraint, and summary statistics of the
/// per-slot series.
pub fn write_bound_report_csv(path: &Path, report: &BoundReport) -> Result<usize> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "quantity,value")?;
    let mut rows = 0;
    let mut field = |name: &str, value: String| -> Result<()> {
        writeln!(out, "{name},{value}")?;
        rows += 1;
        Ok(())
    };
    field("t", report.t.to_string())?;
    field("v", fmt_float(report.v))?;
    field("i_star", report.i_star.to_string())?;
    field("d_pi_i_star", fmt_float(report.d_pi_i_star))?;
    field("delta", fmt_float(report.delta))?;
    field("approximation_gap", fmt_float(report.approximation_gap))?;
    field("j_bar", fmt_float(report.j_bar))?;
    field("h_bar", fmt_float(report.h_bar))?;
    field("zeta", fmt_float(report.zeta))?;
    field("entropy", fmt_float(report.entropy))?;
    field("psi", fmt_float(report.psi))?;
    field("gamma_t", fmt_float(report.gamma_t))?;
    field("q_up", fmt_float(report.q_up))?;
    field("c_constant", fmt_float(report.c_constant))?;
    field("f_slack", fmt_float(report.f_slack))?;
    field("u_t", report.u_t.to_string())?;
    field("threshold_0", fmt_float(report.threshold_0))?;
    field("threshold_1", fmt_float(report.threshold_1))?;
    field("t_in_t0", report.t_in_t0.to_string())?;
    field("t_in_t1", report.t_in_t1.to_string())?;
    field("gamma0", fmt_float(report.gamma0))?;
    field("gamma1", fmt_float(report.gamma1))?;
    field("part_a_bound", fmt_float(report.part_a_bound))?;
    for (i, b) in report.part_b_bound.iter().enumerate() {
        field(&format!("part_b_bound_{}", i + 1), fmt_float(*b))?;
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len().max(1) as f64;
    field("b_tau_mean", fmt_float(mean(&report.b_tau)))?;
    field("p_e_up_mean", fmt_float(mean(&report.p_e_up)))?;
    if let Some(last) = report.p_e_up.last() {
        field("p_e_up_final", fmt_float(*last))?;
    }
    if !report.d_tau.is_empty() {
        let min = report.d_tau.iter().copied().fold(f64::INFINITY, f64::min);
        field("d_tau_min", fmt_float(min))?;
    }
    drop(field);
    out.flush()?;
    Ok(rows)
}

/// Persists an ensemble outcome under `dir`: `trace.csv` (when anything
/// completed) plus `manifest.json` recording exactly which runs made it.
pub fn persist_ensemble(
    dir: &Path,
    config: &RunConfig,
    runs_requested: usize,
    outcome: &EnsembleOutcome,
) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let mut manifest = Manifest::new(config, runs_requested);
    manifest.runs_completed = outcome.completed.len();
    manifest.complete =
        outcome.failures.is_empty() && outcome.completed.len() == runs_requested;
    manifest.failures = outcome
        .failures
        .iter()
        .map(|(run, error)| RunFailure {
            run: *run,
            error: error.clone(),
        })
        .collect();
    if !outcome.completed.is_empty() {
        let rows = write_trace_csv(&dir.join("trace.csv"), &outcome.completed)?;
        manifest.add_file("trace.csv", rows);
    }
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}
