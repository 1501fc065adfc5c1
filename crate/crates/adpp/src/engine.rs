//! The per-slot ADPP simulation loop.
//!
//! Each slot `t` runs the two algorithm steps on the information actually
//! available under a feedback delay of `D` slots:
//!
//! ```text
//!   Step 1 (detect):  j* = argmax_j Σ_{τ=t−D−w+1}^{t−D} log P_j(ω(τ))
//!   Step 2 (select):  m* = argmin_m V·r_0^(m) + Σ_k Q_k(t)·r_k^(m)
//!                     (rewards under the detected member P_j*)
//!   Queues:           Q_k(t+1) = max{ Q_k(t) + p_k(t−D) − c_k, 0 }
//! ```
//!
//! with `p_k(τ) = 0` for `τ < 0`. Before the detection window fills
//! (`t < D + w − 1`) Step 1 scores whatever prefix of observations exists;
//! with no observations at all it falls back to member 0. The queues are the
//! algorithm's only common information: every user could maintain its own
//! copy from the shared delayed feedback, and an optional verification mode
//! does exactly that and checks the replicas stay bitwise identical.

use crate::error::{Error, Result};
use crate::problem::{CoveringSet, Distribution, DistributionSchedule, ProblemSpec};
use crate::strategy::{decode_strategy, StrategyTable};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::VecDeque;

/// Knobs of one simulated episode.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    /// Drift-penalty weight `V ≥ 0`: larger chases the objective harder,
    /// smaller drains the constraint queues faster.
    pub v: f64,
    /// Feedback delay `D` in slots.
    pub delay: usize,
    /// Detection window length `w ≥ 1`.
    pub window: usize,
    /// Episode length `T > D + w`.
    pub horizon: usize,
    /// Per-run RNG seed.
    pub seed: u64,
    /// Maintain per-user queue replicas and fail on any divergence.
    pub verify_common_information: bool,
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.v >= 0.0 && self.v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "V = {} must be finite and non-negative",
                self.v
            )));
        }
        if self.window == 0 {
            return Err(Error::InvalidArgument("window w must be ≥ 1".into()));
        }
        if self.horizon <= self.delay + self.window {
            return Err(Error::InvalidArgument(format!(
                "horizon T = {} must exceed D + w = {}",
                self.horizon,
                self.delay + self.window
            )));
        }
        Ok(())
    }
}

/// Mutable per-episode state: queues, the bounded observation and penalty
/// buffers, the slot counter, and the run's RNG.
#[derive(Debug)]
pub struct EngineState {
    queues: Vec<f64>,
    observations: VecDeque<usize>,
    penalties: VecDeque<Vec<f64>>,
    t: usize,
    rng: ChaCha8Rng,
}

impl EngineState {
    pub fn new(penalty_count: usize, seed: u64) -> Self {
        Self {
            queues: vec![0.0; penalty_count],
            observations: VecDeque::new(),
            penalties: VecDeque::new(),
            t: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn queues(&self) -> &[f64] {
        &self.queues
    }

    pub fn slot(&self) -> usize {
        self.t
    }
}

/// What one slot recorded: the sampled state, both algorithm decisions, the
/// realized penalties `p_0..p_K`, and the queue values `Q(t)` that informed
/// the decision (i.e. before this slot's update).
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub t: usize,
    pub state: usize,
    pub detected: usize,
    pub strategy: u64,
    pub penalties: Vec<f64>,
    pub queues: Vec<f64>,
}

/// One queue update `Q_k ← max{Q_k + p_k(t−D) − c_k, 0}` across all `k`.
/// `delayed` holds the penalty vector `p_1..p_K` from `D` slots ago (zeros
/// during warm-up).
pub fn queue_update(queues: &mut [f64], delayed: &[f64], constraints: &[f64]) {
    for ((q, &p), &c) in queues.iter_mut().zip(delayed).zip(constraints) {
        *q = (*q + p - c).max(0.0);
    }
}

/// Lyapunov function `L = ½ ||Q||²`.
pub fn lyapunov(queues: &[f64]) -> f64 {
    0.5 * queues.iter().map(|&q| q * q).sum::<f64>()
}

/// Step 1: maximum-likelihood detection over the covering set from a window
/// of observed joint states. Members assigning zero mass to any observed
/// state score `−∞`; if every member does, the cover cannot explain the
/// data. An empty window (pre-warm-up) returns member 0. Ties break to the
/// lowest index.
pub fn detect_distribution(window: &[usize], cover: &CoveringSet) -> Result<usize> {
    detect_with_logs(window, &cover.log_pmfs())
}

fn detect_with_logs(window: &[usize], log_pmfs: &[Vec<f64>]) -> Result<usize> {
    if log_pmfs.is_empty() {
        return Err(Error::EmptyCover);
    }
    if window.is_empty() {
        return Ok(0);
    }
    let mut best = (0usize, f64::NEG_INFINITY);
    for (j, logs) in log_pmfs.iter().enumerate() {
        let mut score = 0.0;
        for &w in window {
            score += logs[w];
            if score == f64::NEG_INFINITY {
                break;
            }
        }
        if score > best.1 {
            best = (j, score);
        }
    }
    if best.1 == f64::NEG_INFINITY {
        return Err(Error::DetectionInconsistent);
    }
    Ok(best.0)
}

/// Step 2: drift-plus-penalty strategy selection — the `m` minimizing
/// `V·r_0^(m) + Σ_k Q_k·r_k^(m)` under the detected member's reward table,
/// ties to the lowest index.
pub fn select_strategy(queues: &[f64], table: &StrategyTable, v: f64) -> u64 {
    let f = table.count() as usize;
    let objective = table.row(0);
    let mut best_m = 0usize;
    let mut best_score = f64::INFINITY;
    for m in 0..f {
        let mut score = v * objective[m];
        for (k, &q) in queues.iter().enumerate() {
            if q != 0.0 {
                score += q * table.row(k + 1)[m];
            }
        }
        if score < best_score {
            best_score = score;
            best_m = m;
        }
    }
    best_m as u64
}

/// Precomputes one reward table per covering-set member, so Step 2 is a
/// plain row scan each slot.
pub fn precompute_tables(spec: &ProblemSpec, cover: &CoveringSet) -> Result<Vec<StrategyTable>> {
    cover
        .members()
        .iter()
        .map(|member| crate::strategy::build_reward_matrix(member, spec))
        .collect()
}

/// Runs one full episode and returns its per-slot records. Deterministic in
/// `config.seed`: the only stochastic element is the one state draw per slot.
pub fn run_episode(
    spec: &ProblemSpec,
    schedule: &DistributionSchedule,
    cover: &CoveringSet,
    tables: &[StrategyTable],
    config: &EngineConfig,
) -> Result<Vec<SlotRecord>> {
    config.validate()?;
    if tables.len() != cover.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} reward tables for {} cover members",
            tables.len(),
            cover.len()
        )));
    }
    if schedule.horizon() < config.horizon {
        return Err(Error::HorizonExceeded {
            t: config.horizon - 1,
            horizon: schedule.horizon(),
        });
    }
    let k = spec.penalty_count;
    let d = config.delay;
    let w = config.window;
    let log_pmfs = cover.log_pmfs();
    // Joint action of every strategy on every state is queried once per
    // slot; cache the decode for the realized-penalty lookup.
    let states = spec.num_states();
    let mut state = EngineState::new(k, config.seed);
    let mut replicas: Vec<Vec<f64>> = if config.verify_common_information {
        vec![vec![0.0; k]; spec.num_users]
    } else {
        Vec::new()
    };
    let mut records = Vec::with_capacity(config.horizon);
    let zeros = vec![0.0; k + 1];
    for t in 0..config.horizon {
        let omega = schedule.sample_state(t, &mut state.rng)?;
        state.observations.push_back(omega);
        if state.observations.len() > d + w {
            state.observations.pop_front();
        }
        // The window is every buffered slot up to t−D (the last D entries
        // are not yet visible to the controller).
        let visible = state.observations.len().saturating_sub(d);
        let window: Vec<usize> = state.observations.iter().take(visible).copied().collect();
        let j_star = detect_with_logs(&window, &log_pmfs)?;
        let m_star = select_strategy(&state.queues, &tables[j_star], config.v);
        let strategy = decode_strategy(m_star, spec)?;
        let action = strategy.joint_action(spec, omega);
        let penalties: Vec<f64> = (0..=k)
            .map(|idx| spec.cost_tables[idx][action * states + omega])
            .collect();
        records.push(SlotRecord {
            t,
            state: omega,
            detected: j_star,
            strategy: m_star,
            penalties: penalties.clone(),
            queues: state.queues.clone(),
        });
        // D-delayed feedback: p(t−D), zeros while t < D.
        state.penalties.push_back(penalties);
        if state.penalties.len() > d + 1 {
            state.penalties.pop_front();
        }
        let delayed_full: &[f64] = if t >= d {
            state.penalties.front().expect("buffer non-empty")
        } else {
            &zeros
        };
        queue_update(&mut state.queues, &delayed_full[1..], &spec.constraints);
        if config.verify_common_information {
            for (user, replica) in replicas.iter_mut().enumerate() {
                queue_update(replica, &delayed_full[1..], &spec.constraints);
                for (idx, (&mine, &shared)) in
                    replica.iter().zip(&state.queues).enumerate()
                {
                    if mine.to_bits() != shared.to_bits() {
                        return Err(Error::ReplicaDivergence { t, user, k: idx });
                    }
                }
            }
        }
        state.t = t + 1;
    }
    Ok(records)
}

/// The drift constant `B` under one distribution:
///
/// ```text
///   B(λ) = max_m ½ Σ_{k=1}^K Σ_ω λ(ω) |p_k(S^m(ω), ω) − c_k|
/// ```
///
/// Evaluating at `λ = π_t` gives the Theorem-3 series `B_t`; at the limit
/// `π` it gives the asymptotic constant `B`.
pub fn compute_b(
    lambda: &Distribution,
    spec: &ProblemSpec,
    constraints: &[f64],
) -> Result<f64> {
    Ok(*b_scores(lambda, spec, constraints)?
        .iter()
        .max_by(|a, b| a.partial_cmp(b).expect("finite scores"))
        .expect("at least one strategy"))
}

/// Per-strategy values `½ Σ_k Σ_ω λ(ω)|p_k(S^m(ω),ω) − c_k|`; `compute_b`
/// is their max. Exposed so schedule-wide series can exploit linearity in λ.
pub fn b_scores(
    lambda: &Distribution,
    spec: &ProblemSpec,
    constraints: &[f64],
) -> Result<Vec<f64>> {
    if constraints.len() != spec.penalty_count {
        return Err(Error::DimensionMismatch(format!(
            "{} constraints vs K = {}",
            constraints.len(),
            spec.penalty_count
        )));
    }
    let f = crate::strategy::strategy_count(spec)?;
    let states = spec.num_states();
    // deviation[a·|Ω| + ω] = ½ Σ_k λ(ω)·|p_k(a,ω) − c_k|.
    let mut deviation = vec![0.0; spec.num_actions() * states];
    for (k, &c) in constraints.iter().enumerate() {
        let table = &spec.cost_tables[k + 1];
        for (idx, dev) in deviation.iter_mut().enumerate() {
            *dev += 0.5 * lambda.get(idx % states) * (table[idx] - c).abs();
        }
    }
    Ok((0..f)
        .into_par_iter()
        .map(|m| {
            let strategy = decode_strategy(m, spec).expect("m < F");
            (0..states)
                .map(|w| deviation[strategy.joint_action(spec, w) * states + w])
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{l1_distance, TransientRule};
    use proptest::prelude::*;
    use rand::Rng;

    fn dist(pmf: &[f64]) -> Distribution {
        Distribution::new(pmf.to_vec()).unwrap()
    }

    #[test]
    fn queue_update_examples() {
        let mut q = vec![0.0];
        queue_update(&mut q, &[0.0], &[0.5]);
        assert_eq!(q[0], 0.0);
        let mut q = vec![2.0];
        queue_update(&mut q, &[1.0], &[0.5]);
        assert!((q[0] - 2.5).abs() < 1e-15);
        // Warm-up rule: zero feedback just drains toward the floor.
        let mut q = vec![0.2];
        queue_update(&mut q, &[0.0], &[0.5]);
        assert_eq!(q[0], 0.0);
    }

    #[test]
    fn lyapunov_examples() {
        assert_eq!(lyapunov(&[0.0, 0.0]), 0.0);
        assert!((lyapunov(&[3.0, 4.0]) - 12.5).abs() < 1e-15);
        // Drift from snapshots equals the incremental difference.
        let q0 = [1.0, 2.0];
        let mut q1 = q0;
        queue_update(&mut q1, &[0.7, 0.1], &[0.3, 0.3]);
        let drift = lyapunov(&q1) - lyapunov(&q0);
        let manual = 0.5 * (q1[0] * q1[0] + q1[1] * q1[1])
            - 0.5 * (q0[0] * q0[0] + q0[1] * q0[1]);
        assert!((drift - manual).abs() < 1e-15);
    }

    #[test]
    fn detection_scores_log_likelihood() {
        let cover = CoveringSet::new(vec![dist(&[0.9, 0.1]), dist(&[0.2, 0.8])], 1.0).unwrap();
        // Window [0,0,0,1]: member 0 scores 3·ln 0.9 + ln 0.1 ≈ −2.619,
        // member 1 scores 3·ln 0.2 + ln 0.8 ≈ −5.051.
        assert_eq!(detect_distribution(&[0, 0, 0, 1], &cover).unwrap(), 0);
        // Identical members tie to the lowest index.
        let twins = CoveringSet::new(vec![dist(&[0.5, 0.5]), dist(&[0.5, 0.5])], 1.0).unwrap();
        assert_eq!(detect_distribution(&[0, 1, 1], &twins).unwrap(), 0);
        // Empty window falls back to member 0.
        assert_eq!(detect_distribution(&[], &cover).unwrap(), 0);
    }

    #[test]
    fn detection_excludes_zero_mass_members() {
        let cover =
            CoveringSet::new(vec![dist(&[1.0, 0.0]), dist(&[0.5, 0.5])], 1.0).unwrap();
        // State 1 is impossible under member 0, so member 1 wins even though
        // member 0 explains state 0 better.
        assert_eq!(detect_distribution(&[0, 0, 1], &cover).unwrap(), 1);
        // A window impossible under every member is a hard error.
        let point = CoveringSet::new(vec![dist(&[1.0, 0.0])], 1.0).unwrap();
        assert!(matches!(
            detect_distribution(&[1], &point),
            Err(Error::DetectionInconsistent)
        ));
    }

    #[test]
    fn detection_finds_true_member_at_long_windows() {
        let cover = CoveringSet::new(vec![dist(&[0.9, 0.1]), dist(&[0.2, 0.8])], 1.0).unwrap();
        let truth = cover.members()[1].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let trials = 1000;
        let mut hits = 0;
        for _ in 0..trials {
            let window: Vec<usize> = (0..200)
                .map(|_| truth.sample_with(rng.gen::<f64>()))
                .collect();
            if detect_distribution(&window, &cover).unwrap() == 1 {
                hits += 1;
            }
        }
        assert!(
            hits as f64 / trials as f64 >= 0.99,
            "detector found the truth in only {hits}/{trials} trials"
        );
    }

    fn two_strategy_table(r0: Vec<f64>, r1: Vec<f64>) -> StrategyTable {
        use crate::strategy::build_reward_matrix;
        let f = r0.len();
        let spec = ProblemSpec {
            num_users: 1,
            state_cards: vec![1],
            action_cards: vec![f],
            penalty_count: 1,
            cost_tables: vec![r0, r1],
            constraints: vec![0.0],
            bounds: vec![(-10.0, 10.0); 2],
        };
        build_reward_matrix(&Distribution::point_mass(1, 0).unwrap(), &spec).unwrap()
    }

    #[test]
    fn selection_weighs_queues_against_objective() {
        let table = two_strategy_table(vec![0.1, 0.9, 0.5], vec![1.0, 0.0, 0.15]);
        // No queue pressure: cheapest objective wins.
        assert_eq!(select_strategy(&[0.0], &table, 2.0), 0);
        // V = 0 with queue pressure: smallest constraint penalty wins.
        assert_eq!(select_strategy(&[1.0], &table, 0.0), 1);
        // Mixed: V·r_0 + Q·r_1 = (1.2, 1.8, 1.15) → strategy 2.
        assert_eq!(select_strategy(&[1.0], &table, 2.0), 2);
        // An exact tie in the mixed score breaks to the lower index.
        let tied = two_strategy_table(vec![0.1, 0.9, 0.5], vec![1.0, 0.0, 0.2]);
        assert_eq!(select_strategy(&[1.0], &tied, 2.0), 0);
    }

    proptest! {
        // Jointly scaling (V, Q) by any positive factor never changes the
        // argmin.
        #[test]
        fn selection_invariant_under_joint_scaling(
            seed in 0u64..500,
            scale in 0.01f64..100.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = rng.gen_range(2..6);
            let r0: Vec<f64> = (0..f).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r1: Vec<f64> = (0..f).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let table = two_strategy_table(r0, r1);
            let v = rng.gen_range(0.0..10.0);
            let q = rng.gen_range(0.0..10.0);
            let base = select_strategy(&[q], &table, v);
            let scaled = select_strategy(&[q * scale], &table, v * scale);
            prop_assert_eq!(base, scaled);
        }
    }

    fn toy_scenario() -> (ProblemSpec, DistributionSchedule, CoveringSet) {
        // Two users, 2 states / 2 actions each, one power-style constraint
        // on user 1; objective rewards matching action 1 to state 1.
        let states = 4;
        let actions = 4;
        let mut p0 = vec![0.0; states * actions];
        let mut p1 = vec![0.0; states * actions];
        for a in 0..actions {
            for w in 0..states {
                let a1 = a % 2;
                let a2 = a / 2;
                let w1 = w % 2;
                let w2 = w / 2;
                p0[a * states + w] = -0.6 * (a1 * w1) as f64 - 0.4 * (a2 * w2) as f64;
                p1[a * states + w] = a1 as f64;
            }
        }
        let spec = ProblemSpec {
            num_users: 2,
            state_cards: vec![2, 2],
            action_cards: vec![2, 2],
            penalty_count: 1,
            cost_tables: vec![p0, p1],
            constraints: vec![0.4],
            bounds: vec![(-1.0, 0.0), (0.0, 1.0)],
        };
        let marginal = dist(&[0.3, 0.7]);
        let limit = Distribution::product(&[marginal.clone(), marginal]).unwrap();
        let shifted = dist(&[0.6, 0.4]);
        let other = Distribution::product(&[shifted.clone(), shifted]).unwrap();
        let cover = CoveringSet::new(vec![limit.clone(), other.clone()], 0.5).unwrap();
        let schedule = DistributionSchedule::new(
            limit,
            TransientRule::GeometricBlend {
                anchors: vec![other],
                rho: 0.9,
            },
            400,
        )
        .unwrap();
        (spec, schedule, cover)
    }

    #[test]
    fn episodes_are_deterministic_and_keep_queues_nonnegative() {
        let (spec, schedule, cover) = toy_scenario();
        let tables = precompute_tables(&spec, &cover).unwrap();
        let config = EngineConfig {
            v: 10.0,
            delay: 3,
            window: 20,
            horizon: 400,
            seed: 1234,
            verify_common_information: true,
        };
        let a = run_episode(&spec, &schedule, &cover, &tables, &config).unwrap();
        let b = run_episode(&spec, &schedule, &cover, &tables, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 400);
        for rec in &a {
            assert!(rec.queues.iter().all(|&q| q >= 0.0));
            assert_eq!(rec.penalties.len(), 2);
        }
        // Different seed, different trace.
        let mut other_cfg = config.clone();
        other_cfg.seed = 77;
        let c = run_episode(&spec, &schedule, &cover, &tables, &other_cfg).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_path_queue_bound_holds() {
        // Telescoping the queue update gives, for every run and k:
        //   (1/t) Σ_{τ<t−D} (p_k(τ) − c_k) ≤ Q_k(t)/t + D·max(0, p_max,k − c_k)/t.
        let (spec, schedule, cover) = toy_scenario();
        let tables = precompute_tables(&spec, &cover).unwrap();
        for seed in [1u64, 2, 3] {
            let config = EngineConfig {
                v: 8.0,
                delay: 3,
                window: 10,
                horizon: 400,
                seed,
                verify_common_information: false,
            };
            let trace = run_episode(&spec, &schedule, &cover, &tables, &config).unwrap();
            for &t in &[100usize, 250, 400] {
                // Q(t) for t = horizon is the post-update queue of the last
                // record; reconstruct by replaying the final update.
                let q_t = if t < trace.len() {
                    trace[t].queues[0]
                } else {
                    let mut q = trace[t - 1].queues.clone();
                    let delayed = &trace[t - 1 - config.delay].penalties;
                    queue_update(&mut q, &delayed[1..], &spec.constraints);
                    q[0]
                };
                let sum: f64 = trace[..t.saturating_sub(config.delay)]
                    .iter()
                    .map(|r| r.penalties[1] - spec.constraints[0])
                    .sum();
                let slack = config.delay as f64
                    * (spec.bounds[1].1 - spec.constraints[0]).max(0.0);
                assert!(
                    sum / t as f64 <= q_t / t as f64 + slack / t as f64 + 1e-12,
                    "sample-path bound failed at t = {t}, seed = {seed}"
                );
            }
        }
    }

    #[test]
    fn single_member_no_constraint_episode_is_myopic() {
        // K = 0 and one cover member: every slot picks the strategy
        // minimizing r_0 under that member, independent of queues.
        let spec = ProblemSpec {
            num_users: 1,
            state_cards: vec![2],
            action_cards: vec![2],
            penalty_count: 0,
            cost_tables: vec![vec![0.0, 0.5, 0.9, -0.2]],
            constraints: vec![],
            bounds: vec![(-1.0, 1.0)],
        };
        let limit = dist(&[0.4, 0.6]);
        let cover = CoveringSet::new(vec![limit.clone()], 0.5).unwrap();
        let schedule =
            DistributionSchedule::new(limit.clone(), TransientRule::Stationary, 50).unwrap();
        let tables = precompute_tables(&spec, &cover).unwrap();
        let expect = select_strategy(&[], &tables[0], 1.0);
        let config = EngineConfig {
            v: 1.0,
            delay: 2,
            window: 5,
            horizon: 50,
            seed: 5,
            verify_common_information: false,
        };
        let trace = run_episode(&spec, &schedule, &cover, &tables, &config).unwrap();
        assert!(trace.iter().all(|r| r.strategy == expect));
        assert!(trace.iter().all(|r| r.detected == 0));
    }

    #[test]
    fn compute_b_examples() {
        // K = 0: empty sum.
        let spec0 = ProblemSpec {
            num_users: 1,
            state_cards: vec![2],
            action_cards: vec![2],
            penalty_count: 0,
            cost_tables: vec![vec![0.0; 4]],
            constraints: vec![],
            bounds: vec![(0.0, 0.0)],
        };
        assert_eq!(compute_b(&dist(&[0.5, 0.5]), &spec0, &[]).unwrap(), 0.0);
        // One user, one state, p_1(α, 0) = α, c = 0.5: both strategies give
        // ½·|α − 0.5| = 0.25.
        let spec1 = ProblemSpec {
            num_users: 1,
            state_cards: vec![1],
            action_cards: vec![2],
            penalty_count: 1,
            cost_tables: vec![vec![0.0, 0.0], vec![0.0, 1.0]],
            constraints: vec![0.5],
            bounds: vec![(0.0, 0.0), (0.0, 1.0)],
        };
        let b = compute_b(&Distribution::point_mass(1, 0).unwrap(), &spec1, &[0.5]).unwrap();
        assert!((b - 0.25).abs() < 1e-15);
    }

    #[test]
    fn b_is_lipschitz_in_lambda() {
        // Linearity of the per-strategy scores makes B(λ) a max of linear
        // functions, hence |B(λ₁) − B(λ₂)| ≤ max-slope·||λ₁ − λ₂||₁.
        let (spec, _, _) = toy_scenario();
        let a = Distribution::product(&[dist(&[0.3, 0.7]), dist(&[0.3, 0.7])]).unwrap();
        let b = Distribution::product(&[dist(&[0.5, 0.5]), dist(&[0.4, 0.6])]).unwrap();
        let ba = compute_b(&a, &spec, &spec.constraints).unwrap();
        let bb = compute_b(&b, &spec, &spec.constraints).unwrap();
        let d = l1_distance(&a, &b).unwrap();
        // Slope envelope: ½ Σ_k max|p_k − c_k| = ½·0.6.
        assert!((ba - bb).abs() <= 0.5 * 0.6 * d + 1e-12);
    }
}
