//! Post-processing: time averages, β-mixing estimation, PAC tail bounds,
//! detection error bounds, and the Theorem-3 bound ledger.
//!
//! The central object is a [`TraceEnsemble`]: `R` independent runs of `T`
//! slots each. Probabilities are estimated across runs at fixed slots, never
//! along a single path, matching the bounds' per-slot ensemble semantics.
//!
//! Two results get numerical form here. The PAC tail bound
//!
//! ```text
//!   Pr{ (1/t) Σ p_k(τ) − c_k > ε_k }
//!       ≤ u_t · exp{ −2 ε_{t,k}² v_t² / u_max,k² } + t · β_k(u_t)
//! ```
//!
//! with `u_t·v_t = t` and `ε_{t,k} = ε_k + c_k − (1/t) Σ E p_k(τ)`, splits
//! the trajectory into `v_t` blocks at spacing `u_t`: concentration on the
//! blocks plus a mixing penalty for pretending they are independent. And the
//! full constraint/objective envelopes (`ψ_t(δ)`, `Q_up(t)`, `Γ_t`, `J̄_t`,
//! `H̄_t`, detection error bounds `P_e,up^(τ)`) are assembled by direct
//! substitution in [`theorem3_quantities`].
//!
//! The β-one mixing coefficient of a penalty process,
//! `β_k(s) = sup_t ||P_{t,t+s} − P_t ⊗ P_{t+s}||_TV`, is estimated from the
//! ensemble by histogramming `(p_k(t), p_k(t+s))` across runs on a grid of
//! anchor slots `t` and taking the worst total-variation distance to the
//! product of marginals. Penalties take finitely many values, so the
//! histograms are exact — no binning choices.

use crate::engine::{b_scores, SlotRecord};
use crate::error::{Error, Result};
use crate::problem::{
    l1_distance, metric_entropy, nearest_member, CoveringSet, DistributionSchedule, ProblemSpec,
    TransientRule,
};
use std::collections::HashMap;

/// Which reading of an ambiguous bound statement to evaluate.
///
/// Two of the stated bounds disagree with the concentration argument behind
/// them: the tail bound states `v_t²` where McDiarmid over block averages
/// yields `v_t`, and the detection bound *multiplies* by the range constant
/// `ζ_δ = [log(α_δ/β_δ)]²` where Hoeffding with that log-likelihood range
/// implies *division*. `Printed` evaluates the statements exactly as given;
/// `Hoeffding` evaluates the derivation-consistent variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundVariant {
    Printed,
    Hoeffding,
}

/// A rectangular ensemble of `R` runs × `T` slots, stored columnar.
#[derive(Debug, Clone)]
pub struct TraceEnsemble {
    runs: usize,
    horizon: usize,
    penalty_count: usize,
    states: Vec<u32>,
    detected: Vec<u32>,
    strategies: Vec<u64>,
    /// `penalties[k][run·T + t]`, `k ∈ 0..=K`.
    penalties: Vec<Vec<f64>>,
    /// `queues[k−1][run·T + t]`, `k ∈ 1..=K`; the pre-update snapshot `Q(t)`.
    queues: Vec<Vec<f64>>,
}

impl TraceEnsemble {
    pub fn from_runs(runs: Vec<Vec<SlotRecord>>) -> Result<Self> {
        if runs.is_empty() || runs[0].is_empty() {
            return Err(Error::InvalidArgument("empty ensemble".into()));
        }
        let horizon = runs[0].len();
        let penalty_count = runs[0][0].queues.len();
        if runs.iter().any(|r| r.len() != horizon) {
            return Err(Error::DimensionMismatch(
                "ensemble runs have differing horizons".into(),
            ));
        }
        let r = runs.len();
        let mut out = Self {
            runs: r,
            horizon,
            penalty_count,
            states: Vec::with_capacity(r * horizon),
            detected: Vec::with_capacity(r * horizon),
            strategies: Vec::with_capacity(r * horizon),
            penalties: vec![Vec::with_capacity(r * horizon); penalty_count + 1],
            queues: vec![Vec::with_capacity(r * horizon); penalty_count],
        };
        for run in &runs {
            for rec in run {
                if rec.penalties.len() != penalty_count + 1 || rec.queues.len() != penalty_count
                {
                    return Err(Error::DimensionMismatch(
                        "slot record width differs across the ensemble".into(),
                    ));
                }
                out.states.push(rec.state as u32);
                out.detected.push(rec.detected as u32);
                out.strategies.push(rec.strategy);
                for (k, col) in out.penalties.iter_mut().enumerate() {
                    col.push(rec.penalties[k]);
                }
                for (k, col) in out.queues.iter_mut().enumerate() {
                    col.push(rec.queues[k]);
                }
            }
        }
        Ok(out)
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of constrained penalties `K`.
    pub fn penalty_count(&self) -> usize {
        self.penalty_count
    }

    fn idx(&self, run: usize, t: usize) -> usize {
        debug_assert!(run < self.runs && t < self.horizon);
        run * self.horizon + t
    }

    /// `p_k(t)` of one run, `k ∈ 0..=K`.
    pub fn penalty(&self, k: usize, run: usize, t: usize) -> f64 {
        self.penalties[k][self.idx(run, t)]
    }

    /// Queue snapshot `Q_k(t)` of one run, `k ∈ 1..=K`.
    pub fn queue(&self, k: usize, run: usize, t: usize) -> f64 {
        assert!(
            (1..=self.penalty_count).contains(&k),
            "queue index k = {k} outside 1..=K"
        );
        self.queues[k - 1][self.idx(run, t)]
    }

    pub fn state(&self, run: usize, t: usize) -> usize {
        self.states[self.idx(run, t)] as usize
    }

    pub fn detected(&self, run: usize, t: usize) -> usize {
        self.detected[self.idx(run, t)] as usize
    }

    pub fn strategy(&self, run: usize, t: usize) -> u64 {
        self.strategies[self.idx(run, t)]
    }

    /// Reassembles one slot's record.
    pub fn record(&self, run: usize, t: usize) -> SlotRecord {
        SlotRecord {
            t,
            state: self.state(run, t),
            detected: self.detected(run, t),
            strategy: self.strategy(run, t),
            penalties: (0..=self.penalty_count)
                .map(|k| self.penalty(k, run, t))
                .collect(),
            queues: (1..=self.penalty_count)
                .map(|k| self.queue(k, run, t))
                .collect(),
        }
    }
}

/// Per-run time averages `(1/t) Σ_{τ<t} p_k(τ)` and their ensemble mean.
#[derive(Debug, Clone)]
pub struct TimeAverage {
    pub per_run: Vec<f64>,
    pub mean: f64,
}

pub fn time_average(ensemble: &TraceEnsemble, k: usize, t: usize) -> Result<TimeAverage> {
    if t == 0 || t > ensemble.horizon() {
        return Err(Error::InvalidArgument(format!(
            "time average needs 1 ≤ t ≤ T (got t = {t}, T = {})",
            ensemble.horizon()
        )));
    }
    if k > ensemble.penalty_count() {
        return Err(Error::IndexOutOfRange(format!(
            "penalty index {k} with K = {}",
            ensemble.penalty_count()
        )));
    }
    let per_run: Vec<f64> = (0..ensemble.runs())
        .map(|r| (0..t).map(|tau| ensemble.penalty(k, r, tau)).sum::<f64>() / t as f64)
        .collect();
    let mean = per_run.iter().sum::<f64>() / per_run.len() as f64;
    Ok(TimeAverage { per_run, mean })
}

/// Ensemble-mean running average of `p_k`: entry `t` is
/// `(1/(t+1)) Σ_{τ≤t} mean_runs p_k(τ)`. Used for the utility/power curves.
pub fn mean_running_average(ensemble: &TraceEnsemble, k: usize) -> Result<Vec<f64>> {
    if k > ensemble.penalty_count() {
        return Err(Error::IndexOutOfRange(format!(
            "penalty index {k} with K = {}",
            ensemble.penalty_count()
        )));
    }
    let t_len = ensemble.horizon();
    let r = ensemble.runs() as f64;
    let mut out = Vec::with_capacity(t_len);
    let mut acc = 0.0;
    for t in 0..t_len {
        let slot_mean: f64 =
            (0..ensemble.runs()).map(|run| ensemble.penalty(k, run, t)).sum::<f64>() / r;
        acc += slot_mean;
        out.push(acc / (t + 1) as f64);
    }
    Ok(out)
}

/// Fraction of runs whose time average exceeds `center + threshold` at `t`
/// (`center` is `c_k` for constraints, `p^(opt)` for the objective).
pub fn empirical_tail(
    ensemble: &TraceEnsemble,
    k: usize,
    t: usize,
    threshold: f64,
    center: f64,
) -> Result<f64> {
    if ensemble.runs() < 50 {
        return Err(Error::InsufficientRuns {
            got: ensemble.runs(),
            min: 50,
        });
    }
    let avg = time_average(ensemble, k, t)?;
    let hits = avg
        .per_run
        .iter()
        .filter(|&&a| a - center > threshold)
        .count();
    Ok(hits as f64 / ensemble.runs() as f64)
}

/// An estimated β-one mixing curve for one penalty process.
#[derive(Debug, Clone)]
pub struct MixingEstimate {
    pub penalty_index: usize,
    pub lags: Vec<usize>,
    /// `beta_hat[i]` estimates `β_k(lags[i])`.
    pub beta_hat: Vec<f64>,
    pub anchors: Vec<usize>,
    /// Histogram-sparsity caveats, if any.
    pub warnings: Vec<String>,
}

/// Evenly spaced anchor slots in `[start, horizon − 1 − max_lag]`.
pub fn default_anchor_grid(
    start: usize,
    horizon: usize,
    max_lag: usize,
    count: usize,
) -> Vec<usize> {
    let hi = horizon.saturating_sub(1 + max_lag);
    let lo = start.min(hi);
    let count = count.max(1);
    let mut anchors: Vec<usize> = (0..count)
        .map(|i| lo + (hi - lo) * i / (count - 1).max(1))
        .collect();
    anchors.dedup();
    anchors
}

/// Estimates `β_k(s)` for each lag: the worst (over anchor slots `t`) total
/// variation between the empirical joint law of `(p_k(t), p_k(t+s))` across
/// runs and the product of its marginals.
pub fn estimate_beta_one(
    ensemble: &TraceEnsemble,
    k: usize,
    lags: &[usize],
    anchors: &[usize],
) -> Result<MixingEstimate> {
    if ensemble.runs() < 50 {
        return Err(Error::InsufficientRuns {
            got: ensemble.runs(),
            min: 50,
        });
    }
    if k > ensemble.penalty_count() {
        return Err(Error::IndexOutOfRange(format!(
            "penalty index {k} with K = {}",
            ensemble.penalty_count()
        )));
    }
    if lags.is_empty() || anchors.is_empty() {
        return Err(Error::InvalidArgument(
            "mixing estimation needs at least one lag and one anchor".into(),
        ));
    }
    let r = ensemble.runs();
    let mut beta_hat = Vec::with_capacity(lags.len());
    let mut warnings = Vec::new();
    let mut sparse_warned = false;
    for &s in lags {
        if s == 0 {
            return Err(Error::InvalidArgument("lag 0 is not a valid spacing".into()));
        }
        let usable: Vec<usize> = anchors
            .iter()
            .copied()
            .filter(|&t| t + s < ensemble.horizon())
            .collect();
        if usable.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "no anchor leaves room for lag {s} within horizon {}",
                ensemble.horizon()
            )));
        }
        let mut worst = 0.0f64;
        for &t in &usable {
            let mut joint: HashMap<(u64, u64), usize> = HashMap::new();
            let mut mx: HashMap<u64, usize> = HashMap::new();
            let mut my: HashMap<u64, usize> = HashMap::new();
            for run in 0..r {
                // +0.0 folds −0.0 and +0.0 into one level.
                let x = (ensemble.penalty(k, run, t) + 0.0).to_bits();
                let y = (ensemble.penalty(k, run, t + s) + 0.0).to_bits();
                *joint.entry((x, y)).or_insert(0) += 1;
                *mx.entry(x).or_insert(0) += 1;
                *my.entry(y).or_insert(0) += 1;
            }
            let cells = mx.len() * my.len();
            if !sparse_warned && (r as f64) < 5.0 * cells as f64 {
                warnings.push(format!(
                    "sparse histogram at anchor {t}, lag {s}: {r} runs over {cells} cells \
                     (expected count < 5)"
                ));
                sparse_warned = true;
            }
            let mut tv = 0.0;
            for (&x, &cx) in &mx {
                for (&y, &cy) in &my {
                    let joint_p = *joint.get(&(x, y)).unwrap_or(&0) as f64 / r as f64;
                    let prod_p = (cx as f64 / r as f64) * (cy as f64 / r as f64);
                    tv += (joint_p - prod_p).abs();
                }
            }
            worst = worst.max(0.5 * tv);
        }
        beta_hat.push(worst.clamp(0.0, 1.0));
    }
    Ok(MixingEstimate {
        penalty_index: k,
        lags: lags.to_vec(),
        beta_hat,
        anchors: anchors.to_vec(),
        warnings,
    })
}

/// One evaluated PAC tail bound.
#[derive(Debug, Clone)]
pub struct PacBound {
    pub epsilon: f64,
    /// Centered margin `ε_{t,k} = ε_k + c_k − (1/t)ΣE p_k`.
    pub epsilon_t: f64,
    pub u_t: usize,
    pub v_t: usize,
    pub raw: f64,
    /// `raw` clipped to `[0, 1]` for use as a probability.
    pub clipped: f64,
    pub variant: BoundVariant,
}

/// Evaluates the PAC tail bound at blocking parameter `u_t` (which must
/// divide `t`). `mean_gap` is the estimate of `(1/t)Σ E p_k(τ) − c_k`;
/// `ε_k` may not fall below it (equality yields the vacuous bound).
pub fn pac_tail_bound(
    epsilon_k: f64,
    t: usize,
    u_t: usize,
    beta_at_u_t: f64,
    u_max_k: f64,
    mean_gap: f64,
    variant: BoundVariant,
) -> Result<PacBound> {
    if u_t == 0 || t == 0 || t % u_t != 0 {
        return Err(Error::InvalidArgument(format!(
            "blocking parameter u_t = {u_t} must divide t = {t}"
        )));
    }
    if epsilon_k < mean_gap {
        return Err(Error::EpsilonBelowMeanGap {
            epsilon: epsilon_k,
            mean_gap,
        });
    }
    let v_t = t / u_t;
    let epsilon_t = epsilon_k - mean_gap;
    let scaled = epsilon_t / u_max_k;
    let exponent = match variant {
        BoundVariant::Printed => -2.0 * scaled * scaled * (v_t as f64) * (v_t as f64),
        BoundVariant::Hoeffding => -2.0 * scaled * scaled * v_t as f64,
    };
    let raw = u_t as f64 * exponent.exp() + t as f64 * beta_at_u_t;
    Ok(PacBound {
        epsilon: epsilon_k,
        epsilon_t,
        u_t,
        v_t,
        raw,
        clipped: raw.clamp(0.0, 1.0),
        variant,
    })
}

/// The divergence margins driving detection: for each slot,
/// `D_τ = min_{j≠i*} E_{π_τ} log(P_j(ω)/P_{i*}(ω))` (the per-sample window
/// average collapses to a single expectation under `π_τ`).
#[derive(Debug, Clone)]
pub struct DivergenceSeries {
    pub i_star: usize,
    pub start: usize,
    /// One entry per slot in the requested range; empty for a single-member
    /// cover, where no error event exists.
    pub d_tau: Vec<f64>,
}

pub fn divergence_series(
    schedule: &DistributionSchedule,
    cover: &CoveringSet,
    range: std::ops::Range<usize>,
) -> Result<DivergenceSeries> {
    let (i_star, _) = nearest_member(cover, schedule.limit())?;
    if cover.len() == 1 {
        return Ok(DivergenceSeries {
            i_star,
            start: range.start,
            d_tau: Vec::new(),
        });
    }
    let logs = cover.log_pmfs();
    let start = range.start;
    let mut d_tau = Vec::with_capacity(range.len());
    for tau in range {
        let pmf = schedule.pmf_at(tau)?;
        let mut min_over_j = f64::INFINITY;
        for j in 0..cover.len() {
            if j == i_star {
                continue;
            }
            let mut div = 0.0;
            for (w, &mass) in pmf.pmf().iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                if logs[i_star][w] == f64::NEG_INFINITY {
                    return Err(Error::ZeroMassMember {
                        member: i_star,
                        state: w,
                    });
                }
                if logs[j][w] == f64::NEG_INFINITY {
                    return Err(Error::ZeroMassMember { member: j, state: w });
                }
                div += mass * (logs[j][w] - logs[i_star][w]);
            }
            min_over_j = min_over_j.min(div);
        }
        d_tau.push(min_over_j);
    }
    Ok(DivergenceSeries {
        i_star,
        start,
        d_tau,
    })
}

/// Likelihood-ratio range constant `ζ_δ = [log(α_δ/β_δ)]²`.
pub fn zeta_delta(cover: &CoveringSet) -> f64 {
    let log_ratio = (cover.ceiling() / cover.floor()).ln();
    log_ratio * log_ratio
}

/// An evaluated detection error bound.
#[derive(Debug, Clone, Copy)]
pub struct DetectionBound {
    pub raw: f64,
    pub clipped: f64,
}

/// Detection error bound at one slot:
///
/// ```text
///   P_e,up = exp{ −2 ζ_δ D_τ² w + H }        (printed)
///   P_e,up = exp{ −2 D_τ² w / ζ_δ + H }      (Hoeffding-consistent)
/// ```
///
/// `d_tau = None` means no competing member exists (single-member cover) and
/// the error probability is exactly zero.
pub fn detection_error_bound(
    d_tau: Option<f64>,
    w: usize,
    zeta: f64,
    entropy: f64,
    variant: BoundVariant,
) -> DetectionBound {
    let Some(d) = d_tau else {
        return DetectionBound {
            raw: 0.0,
            clipped: 0.0,
        };
    };
    let margin = 2.0 * d * d * w as f64;
    let exponent = match variant {
        BoundVariant::Printed => -margin * zeta + entropy,
        BoundVariant::Hoeffding => -margin / zeta + entropy,
    };
    let raw = exponent.exp();
    DetectionBound {
        raw,
        clipped: raw.clamp(0.0, 1.0),
    }
}

/// `B_τ` for every slot in `0..t`. Exploits linearity of the per-strategy
/// scores in `λ` for blend schedules (one enumeration per anchor instead of
/// one per slot); any other rule falls back to per-slot evaluation.
pub fn b_series(
    schedule: &DistributionSchedule,
    spec: &ProblemSpec,
    constraints: &[f64],
    t: usize,
) -> Result<Vec<f64>> {
    if t > schedule.horizon() {
        return Err(Error::HorizonExceeded {
            t,
            horizon: schedule.horizon(),
        });
    }
    match schedule.rule() {
        TransientRule::Stationary => {
            let b = crate::engine::compute_b(schedule.limit(), spec, constraints)?;
            Ok(vec![b; t])
        }
        TransientRule::GeometricBlend { anchors, rho } => {
            let limit_scores = b_scores(schedule.limit(), spec, constraints)?;
            let anchor_scores: Vec<Vec<f64>> = anchors
                .iter()
                .map(|a| b_scores(a, spec, constraints))
                .collect::<Result<_>>()?;
            let mut series = Vec::with_capacity(t);
            for tau in 0..t {
                let w = rho.powf(tau as f64);
                let scores = &anchor_scores[tau % anchors.len()];
                let b = limit_scores
                    .iter()
                    .zip(scores)
                    .map(|(&sl, &sa)| (1.0 - w) * sl + w * sa)
                    .fold(f64::NEG_INFINITY, f64::max);
                series.push(b);
            }
            Ok(series)
        }
    }
}

/// Everything [`theorem3_quantities`] needs beyond the schedule/cover pair.
#[derive(Debug, Clone)]
pub struct Theorem3Inputs {
    pub v: f64,
    pub delay: usize,
    pub window: usize,
    /// Evaluation horizon `t`.
    pub t: usize,
    /// Baseline LP value under the limit `π` (minimization convention).
    pub p_opt: f64,
    /// Empirical Lipschitz constant of `G`.
    pub c_hat: f64,
    /// Stationarity tolerance `ν ≥ 0`.
    pub nu: f64,
    /// Queue-start constant `C ≥ max ½||Q(D)||²`.
    pub c_constant: f64,
    /// Slack constant `F_slack ≥ p^(opt) − E p_0(τ)`.
    pub f_slack: f64,
    /// Blocking parameter for the waiting-time thresholds.
    pub u_t: usize,
    /// `β_0(u_t)` — mixing of the objective process.
    pub beta0_at_u_t: f64,
    /// `max_{k≥1} β_k(u_t)` — worst constraint-process mixing.
    pub beta1_at_u_t: f64,
    /// Confidence levels for Parts A and B.
    pub gamma0: f64,
    pub gamma1: f64,
    /// Accuracy `ε > 0` in both parts.
    pub epsilon: f64,
    pub variant: BoundVariant,
}

/// The assembled Theorem-3 ledger at horizon `t`.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub t: usize,
    pub v: f64,
    pub i_star: usize,
    pub d_pi_i_star: f64,
    /// `Δ_{π,P_i*} = b_max (d + ν)`.
    pub delta: f64,
    /// `(ĉ + 1) · Δ` — the Theorem-2 approximation gap.
    pub approximation_gap: f64,
    pub j_bar: f64,
    pub h_bar: f64,
    pub b_tau: Vec<f64>,
    /// Empty for single-member covers.
    pub d_tau: Vec<f64>,
    pub zeta: f64,
    pub entropy: f64,
    /// Clipped `P_e,up^(τ)` per slot.
    pub p_e_up: Vec<f64>,
    pub psi: f64,
    pub gamma_t: f64,
    pub q_up: f64,
    pub c_constant: f64,
    pub f_slack: f64,
    pub u_t: usize,
    /// Waiting-time thresholds: `t` must exceed these for Parts A / B.
    pub threshold_0: f64,
    pub threshold_1: f64,
    pub t_in_t0: bool,
    pub t_in_t1: bool,
    pub gamma0: f64,
    pub gamma1: f64,
    /// Part A envelope `p^(opt) + (ĉ+1)Δ + ψ_t(δ) + ε`.
    pub part_a_bound: f64,
    /// Part B envelope `c_k + Q_up(t) + ε` per constraint.
    pub part_b_bound: Vec<f64>,
}

/// Assembles every Theorem-3 quantity by direct substitution.
pub fn theorem3_quantities(
    spec: &ProblemSpec,
    schedule: &DistributionSchedule,
    cover: &CoveringSet,
    inputs: &Theorem3Inputs,
) -> Result<BoundReport> {
    let t = inputs.t;
    if t == 0 {
        return Err(Error::InvalidArgument("theorem-3 horizon t = 0".into()));
    }
    let t_f = t as f64;
    let t_beta0 = t_f * inputs.beta0_at_u_t;
    let t_beta1 = t_f * inputs.beta1_at_u_t;
    if inputs.gamma0 <= t_beta0 {
        return Err(Error::MixingTooSlow {
            gamma: inputs.gamma0,
            t_beta: t_beta0,
        });
    }
    if inputs.gamma1 <= t_beta1 {
        return Err(Error::MixingTooSlow {
            gamma: inputs.gamma1,
            t_beta: t_beta1,
        });
    }

    let (i_star, d_pi_i_star) = nearest_member(cover, schedule.limit())?;
    let b_max = (0..=spec.penalty_count)
        .map(|k| spec.b_max(k))
        .fold(0.0, f64::max);
    let delta = b_max * (d_pi_i_star + inputs.nu);
    let approximation_gap = (inputs.c_hat + 1.0) * delta;

    // J̄_t: worst penalty ceiling times (averaged schedule deviation + δ).
    let mut norm_sum = 0.0;
    for tau in 0..t {
        norm_sum += l1_distance(&schedule.pmf_at(tau)?, schedule.limit())?;
    }
    let p_max_worst = (0..=spec.penalty_count)
        .map(|k| spec.bounds[k].1)
        .fold(f64::NEG_INFINITY, f64::max);
    let j_bar = p_max_worst * (norm_sum / t_f + cover.radius());

    let b_tau = b_series(schedule, spec, &spec.constraints, t)?;
    let b_sum: f64 = b_tau.iter().sum();
    let one_plus_2d = 1.0 + 2.0 * inputs.delay as f64;
    let h_bar = one_plus_2d * b_sum / t_f;

    let zeta = zeta_delta(cover);
    let entropy = metric_entropy(cover);
    let divergence = divergence_series(schedule, cover, 0..t)?;
    let p_e_up: Vec<f64> = if divergence.d_tau.is_empty() {
        vec![0.0; t]
    } else {
        divergence
            .d_tau
            .iter()
            .map(|&d| {
                detection_error_bound(Some(d), inputs.window, zeta, entropy, inputs.variant)
                    .clipped
            })
            .collect()
    };
    let pe_sum: f64 = p_e_up.iter().sum();
    let b_pe_sum: f64 = b_tau.iter().zip(&p_e_up).map(|(&b, &p)| b * p).sum();
    let p_max_0 = spec.bounds[0].1;

    let psi = if inputs.v > 0.0 {
        (inputs.v * (inputs.c_hat + 1.0) * j_bar + h_bar + inputs.c_constant / t_f) / inputs.v
            + one_plus_2d * b_pe_sum / (t_f * inputs.v)
            + p_max_0 * pe_sum / t_f
    } else {
        f64::INFINITY
    };
    let gamma_t = inputs.v * (inputs.c_hat + 1.0) * (delta + j_bar)
        + h_bar
        + inputs.c_constant
        + one_plus_2d * b_pe_sum
        + p_max_0 * pe_sum;
    let q_up = (inputs.v * inputs.f_slack / t_f + gamma_t / (t_f * t_f)).sqrt();

    let u_max_0 = spec.u_max(0);
    let threshold = |gamma: f64, t_beta: f64| -> f64 {
        let arg = inputs.u_t as f64 / (gamma - t_beta);
        if arg <= 1.0 {
            0.0
        } else {
            u_max_0 * inputs.u_t as f64 / (2.0f64.sqrt() * inputs.epsilon) * arg.ln().sqrt()
        }
    };
    let threshold_0 = threshold(inputs.gamma0, t_beta0);
    let threshold_1 = threshold(inputs.gamma1, t_beta1);

    let part_a_bound = inputs.p_opt + approximation_gap + psi + inputs.epsilon;
    let part_b_bound = spec
        .constraints
        .iter()
        .map(|&c| c + q_up + inputs.epsilon)
        .collect();

    Ok(BoundReport {
        t,
        v: inputs.v,
        i_star,
        d_pi_i_star,
        delta,
        approximation_gap,
        j_bar,
        h_bar,
        b_tau,
        d_tau: divergence.d_tau,
        zeta,
        entropy,
        p_e_up,
        psi,
        gamma_t,
        q_up,
        c_constant: inputs.c_constant,
        f_slack: inputs.f_slack,
        u_t: inputs.u_t,
        threshold_0,
        threshold_1,
        t_in_t0: t_f > threshold_0,
        t_in_t1: t_f > threshold_1,
        gamma0: inputs.gamma0,
        gamma1: inputs.gamma1,
        part_a_bound,
        part_b_bound,
    })
}

/// `Q(t)` for `t ≤ T`. Recorded snapshots are pre-update, so the ensemble
/// carries `Q(0)..Q(T−1)` directly; `t = T` replays the final update (fed by
/// the penalties from slot `T−1−D`, or warm-up zeros).
pub fn queues_at(
    ensemble: &TraceEnsemble,
    run: usize,
    t: usize,
    constraints: &[f64],
    delay: usize,
) -> Result<Vec<f64>> {
    let horizon = ensemble.horizon();
    let kk = ensemble.penalty_count();
    if t > horizon || constraints.len() != kk {
        return Err(Error::InvalidArgument(format!(
            "queues_at t = {t} with horizon {horizon} and {} constraints for K = {kk}",
            constraints.len()
        )));
    }
    if t < horizon {
        return Ok((1..=kk).map(|k| ensemble.queue(k, run, t)).collect());
    }
    let mut queues: Vec<f64> = (1..=kk).map(|k| ensemble.queue(k, run, horizon - 1)).collect();
    let delayed: Vec<f64> = if horizon - 1 >= delay {
        (1..=kk)
            .map(|k| ensemble.penalty(k, run, horizon - 1 - delay))
            .collect()
    } else {
        vec![0.0; kk]
    };
    crate::engine::queue_update(&mut queues, &delayed, constraints);
    Ok(queues)
}

/// Queue-start constant `C = max_runs ½||Q(D)||²` read off the ensemble.
pub fn c_constant(ensemble: &TraceEnsemble, delay: usize) -> f64 {
    let t = delay.min(ensemble.horizon() - 1);
    (0..ensemble.runs())
        .map(|r| {
            0.5 * (1..=ensemble.penalty_count())
                .map(|k| {
                    let q = ensemble.queue(k, r, t);
                    q * q
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Slack constant `F_slack = max(0, p^(opt) − p_min,0)`, the coarsest bound
/// on `p^(opt) − E p_0(τ)`.
pub fn f_slack(p_opt: f64, p_min_0: f64) -> f64 {
    (p_opt - p_min_0).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Distribution;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dist(pmf: &[f64]) -> Distribution {
        Distribution::new(pmf.to_vec()).unwrap()
    }

    /// Synthesizes an ensemble with given per-slot penalty values; queues
    /// are zeros, states/strategies dummies.
    fn synthetic(penalties: Vec<Vec<Vec<f64>>>) -> TraceEnsemble {
        let runs = penalties
            .into_iter()
            .map(|run| {
                run.into_iter()
                    .enumerate()
                    .map(|(t, p)| SlotRecord {
                        t,
                        state: 0,
                        detected: 0,
                        strategy: 0,
                        queues: vec![0.0; p.len() - 1],
                        penalties: p,
                    })
                    .collect()
            })
            .collect();
        TraceEnsemble::from_runs(runs).unwrap()
    }

    #[test]
    fn time_average_examples() {
        // Constant penalty: average equals the constant.
        let ens = synthetic(vec![vec![vec![0.7, 0.0]; 10]; 3]);
        let avg = time_average(&ens, 0, 10).unwrap();
        assert!(avg.per_run.iter().all(|&a| (a - 0.7).abs() < 1e-15));
        assert!((avg.mean - 0.7).abs() < 1e-15);
        // Alternating 0, 1 averages to 0.5 at even t.
        let alternating: Vec<Vec<f64>> = (0..10)
            .map(|t| vec![(t % 2) as f64, 0.0])
            .collect();
        let ens = synthetic(vec![alternating; 2]);
        let avg = time_average(&ens, 0, 10).unwrap();
        assert!((avg.mean - 0.5).abs() < 1e-15);
        assert!(time_average(&ens, 0, 11).is_err());
    }

    #[test]
    fn empirical_tail_degenerate_thresholds() {
        let ens = synthetic(vec![vec![vec![0.5, 0.0]; 5]; 60]);
        assert_eq!(
            empirical_tail(&ens, 0, 5, f64::INFINITY, 0.0).unwrap(),
            0.0
        );
        assert_eq!(
            empirical_tail(&ens, 0, 5, f64::NEG_INFINITY, 0.0).unwrap(),
            1.0
        );
        let small = synthetic(vec![vec![vec![0.5, 0.0]; 5]; 10]);
        assert!(matches!(
            empirical_tail(&small, 0, 5, 0.0, 0.0),
            Err(Error::InsufficientRuns { .. })
        ));
    }

    fn two_level_ensemble(runs: usize, horizon: usize, coupled: bool, seed: u64) -> TraceEnsemble {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<Vec<Vec<f64>>> = (0..runs)
            .map(|_| {
                let mut slots = Vec::with_capacity(horizon);
                let first: f64 = if rng.gen::<f64>() < 0.5 { 0.0 } else { 1.0 };
                for _ in 0..horizon {
                    let v = if coupled {
                        first
                    } else if rng.gen::<f64>() < 0.5 {
                        0.0
                    } else {
                        1.0
                    };
                    slots.push(vec![v, 0.0]);
                }
                slots
            })
            .collect();
        synthetic(data)
    }

    #[test]
    fn mixing_estimator_is_calibrated_on_iid_traces() {
        let ens = two_level_ensemble(2000, 30, false, 42);
        let anchors = default_anchor_grid(0, 30, 10, 20);
        let est = estimate_beta_one(&ens, 0, &[1, 5, 10], &anchors).unwrap();
        for (&lag, &beta) in est.lags.iter().zip(&est.beta_hat) {
            assert!(
                beta <= 0.05,
                "i.i.d. traces should show β̂ ≤ 0.05, got {beta} at lag {lag}"
            );
        }
    }

    #[test]
    fn mixing_estimator_sees_perfect_coupling() {
        let ens = two_level_ensemble(2000, 30, true, 7);
        let anchors = default_anchor_grid(0, 30, 10, 20);
        let est = estimate_beta_one(&ens, 0, &[1, 5, 10], &anchors).unwrap();
        for &beta in &est.beta_hat {
            assert!(
                (beta - 0.5).abs() <= 0.02,
                "coupled two-level β̂ should be 0.5 ± 0.02, got {beta}"
            );
            assert!((0.0..=1.0).contains(&beta));
        }
    }

    #[test]
    fn pac_bound_examples() {
        // β ≡ 0, u_t = 1 → pure exponential in t².
        let b = pac_tail_bound(0.1, 100, 1, 0.0, 1.0, 0.0, BoundVariant::Printed).unwrap();
        let expect = (-2.0f64 * 0.01 * 100.0 * 100.0).exp();
        assert!((b.raw - expect).abs() < 1e-15);
        assert_eq!(b.v_t, 100);
        // ε_{t,k} = 0: vacuous, clipped to 1.
        let b = pac_tail_bound(0.2, 100, 10, 0.0, 1.0, 0.2, BoundVariant::Printed).unwrap();
        assert_eq!(b.epsilon_t, 0.0);
        assert!(b.raw >= b.u_t as f64);
        assert_eq!(b.clipped, 1.0);
        // Worked example: 10·e^{−50} + 1000·10⁻⁶ ≈ 0.001.
        let b =
            pac_tail_bound(0.05, 1000, 10, 1e-6, 1.0, 0.0, BoundVariant::Printed).unwrap();
        let expect = 10.0 * (-50.0f64).exp() + 1e-3;
        assert!((b.raw - expect).abs() < 1e-18);
        assert!((b.raw - 1e-3).abs() < 1e-6);
        // Preconditions.
        assert!(matches!(
            pac_tail_bound(0.1, 100, 1, 0.0, 1.0, 0.2, BoundVariant::Printed),
            Err(Error::EpsilonBelowMeanGap { .. })
        ));
        assert!(pac_tail_bound(0.1, 100, 3, 0.0, 1.0, 0.0, BoundVariant::Printed).is_err());
    }

    #[test]
    fn pac_bound_monotone_in_v_t() {
        // With β held fixed, shrinking u_t (growing v_t) tightens the bound.
        let t = 1024;
        let mut last = f64::INFINITY;
        for u_t in [256usize, 64, 16, 4, 1] {
            for variant in [BoundVariant::Printed, BoundVariant::Hoeffding] {
                let b = pac_tail_bound(0.05, t, u_t, 1e-9, 1.0, 0.0, variant).unwrap();
                assert!(b.raw.is_finite());
            }
            let b = pac_tail_bound(0.05, t, u_t, 1e-9, 1.0, 0.0, BoundVariant::Printed)
                .unwrap();
            assert!(b.raw <= last + 1e-18, "bound grew as v_t increased");
            last = b.raw;
        }
    }

    fn stationary_two_member() -> (DistributionSchedule, CoveringSet) {
        let p1 = dist(&[0.9, 0.1]);
        let p2 = dist(&[0.2, 0.8]);
        let cover = CoveringSet::new(vec![p1.clone(), p2], 0.5).unwrap();
        let schedule =
            DistributionSchedule::new(p1, crate::problem::TransientRule::Stationary, 100)
                .unwrap();
        (schedule, cover)
    }

    #[test]
    fn divergence_matches_hand_arithmetic() {
        let (schedule, cover) = stationary_two_member();
        let series = divergence_series(&schedule, &cover, 0..10).unwrap();
        assert_eq!(series.i_star, 0);
        let expect = 0.9 * (0.2f64 / 0.9).ln() + 0.1 * (0.8f64 / 0.1).ln();
        for &d in &series.d_tau {
            assert!((d - expect).abs() < 1e-12);
            // Gibbs: −KL ≤ 0 whenever π_τ = P_i*.
            assert!(d <= 0.0);
        }
        assert!((expect + 1.145725).abs() < 1e-6);
    }

    #[test]
    fn divergence_monte_carlo_agreement() {
        let (schedule, cover) = stationary_two_member();
        let series = divergence_series(&schedule, &cover, 0..1).unwrap();
        let exact = series.d_tau[0];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let logs = cover.log_pmfs();
        let n = 100_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                let w = schedule.pmf_at(0).unwrap().sample_with(rng.gen::<f64>());
                logs[1][w] - logs[0][w]
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n as f64;
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - exact).abs() <= 3.0 * se,
            "MC estimate {mean} vs exact {exact} (se {se})"
        );
    }

    #[test]
    fn divergence_rejects_zero_mass_members() {
        let p1 = dist(&[0.5, 0.5]);
        let p2 = dist(&[1.0, 0.0]);
        let cover = CoveringSet::new(vec![p1.clone(), p2], 0.5).unwrap();
        let schedule =
            DistributionSchedule::new(p1, crate::problem::TransientRule::Stationary, 10)
                .unwrap();
        assert!(matches!(
            divergence_series(&schedule, &cover, 0..5),
            Err(Error::ZeroMassMember { member: 1, .. })
        ));
    }

    #[test]
    fn single_member_cover_has_no_error_event() {
        let p1 = dist(&[0.5, 0.5]);
        let cover = CoveringSet::new(vec![p1.clone()], 0.5).unwrap();
        let schedule =
            DistributionSchedule::new(p1, crate::problem::TransientRule::Stationary, 10)
                .unwrap();
        let series = divergence_series(&schedule, &cover, 0..5).unwrap();
        assert!(series.d_tau.is_empty());
        let bound =
            detection_error_bound(None, 40, 1.0, 0.0, BoundVariant::Printed);
        assert_eq!(bound.clipped, 0.0);
    }

    #[test]
    fn detection_bound_shapes() {
        // D_τ = 0: vacuous e^H, clipped to 1.
        let b = detection_error_bound(Some(0.0), 40, 2.0, 8f64.ln(), BoundVariant::Printed);
        assert!((b.raw - 8.0).abs() < 1e-12);
        assert_eq!(b.clipped, 1.0);
        // Doubling w shifts the log-bound by exactly −2ζD²w.
        let zeta = 1.7;
        let d = -0.8;
        let h = 8f64.ln();
        let b1 = detection_error_bound(Some(d), 10, zeta, h, BoundVariant::Printed);
        let b2 = detection_error_bound(Some(d), 20, zeta, h, BoundVariant::Printed);
        let shift = b2.raw.ln() - b1.raw.ln();
        assert!((shift + 2.0 * zeta * d * d * 10.0).abs() < 1e-9);
        // Monotone non-increasing in w, both variants.
        for variant in [BoundVariant::Printed, BoundVariant::Hoeffding] {
            let mut last = f64::INFINITY;
            for w in [1usize, 5, 10, 50, 100] {
                let b = detection_error_bound(Some(d), w, zeta, h, variant);
                assert!(b.raw <= last);
                assert!((0.0..=1.0).contains(&b.clipped));
                last = b.raw;
            }
        }
        // Hoeffding variant divides by ζ instead of multiplying.
        let bh = detection_error_bound(Some(d), 10, zeta, h, BoundVariant::Hoeffding);
        let expect = (-2.0 * d * d * 10.0 / zeta + h).exp();
        assert!((bh.raw - expect).abs() < 1e-12);
    }

    fn tiny_spec() -> ProblemSpec {
        ProblemSpec {
            num_users: 1,
            state_cards: vec![2],
            action_cards: vec![2],
            penalty_count: 1,
            cost_tables: vec![vec![0.0, -0.5, -0.25, -1.0], vec![0.0, 0.0, 1.0, 1.0]],
            constraints: vec![0.4],
            bounds: vec![(-1.0, 0.0), (0.0, 1.0)],
        }
    }

    fn theorem3_inputs() -> Theorem3Inputs {
        Theorem3Inputs {
            v: 10.0,
            delay: 2,
            window: 10,
            t: 50,
            p_opt: -0.5,
            c_hat: 1.0,
            nu: 0.0,
            c_constant: 0.1,
            f_slack: 0.5,
            u_t: 5,
            beta0_at_u_t: 1e-6,
            beta1_at_u_t: 1e-6,
            gamma0: 0.1,
            gamma1: 0.1,
            epsilon: 0.05,
            variant: BoundVariant::Printed,
        }
    }

    #[test]
    fn theorem3_stationary_reductions() {
        let spec = tiny_spec();
        let limit = dist(&[0.4, 0.6]);
        let cover = CoveringSet::new(vec![limit.clone(), dist(&[0.7, 0.3])], 0.25).unwrap();
        let schedule =
            DistributionSchedule::new(limit, crate::problem::TransientRule::Stationary, 100)
                .unwrap();
        let report =
            theorem3_quantities(&spec, &schedule, &cover, &theorem3_inputs()).unwrap();
        // Stationary: J̄_t = max_k p_max,k · δ exactly.
        let p_max_worst = 1.0;
        assert!((report.j_bar - p_max_worst * 0.25).abs() < 1e-12);
        // Δ = b_max·(d + ν) with d = 0.
        assert_eq!(report.d_pi_i_star, 0.0);
        assert_eq!(report.delta, 0.0);
        assert!(report.q_up > 0.0);
        assert!(report.psi.is_finite());
        assert_eq!(report.part_b_bound.len(), 1);
        assert!(report.part_b_bound[0] > 0.4);
        // B_τ constant over the stationary schedule.
        assert!(report
            .b_tau
            .iter()
            .all(|&b| (b - report.b_tau[0]).abs() < 1e-12));
    }

    #[test]
    fn theorem3_delay_zero_reduction_and_mixing_guard() {
        let spec = tiny_spec();
        let limit = dist(&[0.4, 0.6]);
        let cover = CoveringSet::new(vec![limit.clone()], 0.25).unwrap();
        let schedule = DistributionSchedule::new(
            limit,
            crate::problem::TransientRule::Stationary,
            100,
        )
        .unwrap();
        let mut inputs = theorem3_inputs();
        inputs.delay = 0;
        let report = theorem3_quantities(&spec, &schedule, &cover, &inputs).unwrap();
        let b_mean = report.b_tau.iter().sum::<f64>() / report.t as f64;
        assert!((report.h_bar - b_mean).abs() < 1e-12);
        // Single member: no detection error anywhere.
        assert!(report.p_e_up.iter().all(|&p| p == 0.0));
        // γ too small for the observed mixing is a hard error.
        inputs.gamma0 = 1e-9;
        inputs.beta0_at_u_t = 0.1;
        assert!(matches!(
            theorem3_quantities(&spec, &schedule, &cover, &inputs),
            Err(Error::MixingTooSlow { .. })
        ));
    }

    #[test]
    fn b_series_matches_direct_evaluation_on_blends() {
        let spec = tiny_spec();
        let limit = dist(&[0.4, 0.6]);
        let anchors = vec![dist(&[0.9, 0.1]), dist(&[0.1, 0.9])];
        let schedule = DistributionSchedule::new(
            limit,
            crate::problem::TransientRule::GeometricBlend {
                anchors,
                rho: 0.9,
            },
            60,
        )
        .unwrap();
        let fast = b_series(&schedule, &spec, &spec.constraints, 40).unwrap();
        for (tau, &b) in fast.iter().enumerate() {
            let direct = crate::engine::compute_b(
                &schedule.pmf_at(tau).unwrap(),
                &spec,
                &spec.constraints,
            )
            .unwrap();
            assert!(
                (b - direct).abs() < 1e-12,
                "B_{tau} mismatch: {b} vs {direct}"
            );
        }
    }

    #[test]
    fn c_constant_and_f_slack_read_the_ensemble() {
        let mut runs = Vec::new();
        for (q1, q2) in [(1.0, 2.0), (3.0, 4.0)] {
            let recs: Vec<SlotRecord> = (0..5)
                .map(|t| SlotRecord {
                    t,
                    state: 0,
                    detected: 0,
                    strategy: 0,
                    penalties: vec![0.0, 0.0, 0.0],
                    queues: if t == 2 { vec![q1, q2] } else { vec![0.0, 0.0] },
                })
                .collect();
            runs.push(recs);
        }
        let ens = TraceEnsemble::from_runs(runs).unwrap();
        assert!((c_constant(&ens, 2) - 12.5).abs() < 1e-15);
        assert_eq!(f_slack(-0.1, -1.0), 0.9);
        assert_eq!(f_slack(-1.0, -0.5), 0.0);
    }

    #[test]
    fn queues_at_replays_the_closing_update() {
        // One run, T = 4, K = 1: p_1 ≡ 1, c_1 = 0.25, D = 1. Snapshots grow
        // by 0.75 per slot once feedback arrives.
        let recs: Vec<SlotRecord> = (0..4)
            .map(|t| SlotRecord {
                t,
                state: 0,
                detected: 0,
                strategy: 0,
                penalties: vec![0.0, 1.0],
                queues: vec![0.75 * t.saturating_sub(1) as f64],
            })
            .collect();
        let ens = TraceEnsemble::from_runs(vec![recs]).unwrap();
        let c = [0.25];
        for t in 0..4 {
            assert_eq!(
                queues_at(&ens, 0, t, &c, 1).unwrap(),
                vec![0.75 * t.saturating_sub(1) as f64]
            );
        }
        // Q(4) = max{Q(3) + p_1(2) − c_1, 0} = 1.5 + 0.75.
        assert_eq!(queues_at(&ens, 0, 4, &c, 1).unwrap(), vec![2.25]);
        assert!(queues_at(&ens, 0, 5, &c, 1).is_err());
        assert!(queues_at(&ens, 0, 4, &[0.25, 0.5], 1).is_err());
    }
}
