//! Pure distributed strategies and expected-penalty matrices.
//!
//! A pure strategy assigns each user a total map `s_i: Ω_i → A_i`; user `i`
//! acts on its private state only, which is exactly the distributed-decision
//! structure of the problem. With finite spaces there are
//!
//! ```text
//!   F = Π_i |A_i|^{|Ω_i|}
//! ```
//!
//! such strategies. They are enumerated in mixed-radix order over the
//! per-user, per-state action digits: user 1 is least significant, and
//! within a user, state 0 is least significant. Index `m = 0` maps every
//! state of every user to action 0.
//!
//! For a distribution `λ` over joint states, strategy `m` has expected
//! penalties
//!
//! ```text
//!   r_{k,λ}^(m) = Σ_ω λ(ω) · p_k(S^m(ω), ω)
//! ```
//!
//! collected for all `k` and `m` into a [`StrategyTable`]. Both the
//! baseline LP and the per-slot drift-plus-penalty rule work on these
//! matrices, so they are built once per candidate distribution and reused.

use crate::error::{Error, Result};
use crate::problem::{Distribution, ProblemSpec};
use rayon::prelude::*;

/// Default ceiling on the number of enumerable strategies.
pub const DEFAULT_STRATEGY_CAP: u64 = 1_000_000;

/// One pure distributed strategy: per-user lookup tables `Ω_i → A_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PureStrategy {
    tables: Vec<Vec<usize>>,
}

impl PureStrategy {
    /// Action user `i` takes on private state `ω_i`.
    pub fn action_for(&self, user: usize, state: usize) -> usize {
        self.tables[user][state]
    }

    /// Per-user lookup tables.
    pub fn tables(&self) -> &[Vec<usize>] {
        &self.tables
    }

    /// The joint action this strategy produces on a joint state.
    pub fn joint_action(&self, spec: &ProblemSpec, joint_state: usize) -> usize {
        let digits = spec.decode_state(joint_state);
        let actions: Vec<usize> = digits
            .iter()
            .enumerate()
            .map(|(i, &w)| self.tables[i][w])
            .collect();
        spec.encode_action(&actions)
    }
}

/// Exact strategy count `F`, erroring if it exceeds [`DEFAULT_STRATEGY_CAP`].
pub fn strategy_count(spec: &ProblemSpec) -> Result<u64> {
    strategy_count_with_cap(spec, DEFAULT_STRATEGY_CAP)
}

/// Exact strategy count `F`, erroring if it exceeds `cap`.
pub fn strategy_count_with_cap(spec: &ProblemSpec, cap: u64) -> Result<u64> {
    let mut f: u128 = 1;
    for (&actions, &states) in spec.action_cards.iter().zip(&spec.state_cards) {
        for _ in 0..states {
            f = f
                .checked_mul(actions as u128)
                .ok_or(Error::StrategyCountOverflow)?;
            if f > cap as u128 {
                return Err(Error::StrategyCapExceeded { f, cap });
            }
        }
    }
    Ok(f as u64)
}

/// Decodes strategy index `m ∈ {0, …, F−1}` into its per-user tables.
pub fn decode_strategy(m: u64, spec: &ProblemSpec) -> Result<PureStrategy> {
    let f = strategy_count(spec)?;
    if m >= f {
        return Err(Error::IndexOutOfRange(format!(
            "strategy index {m} with F = {f}"
        )));
    }
    let mut rest = m;
    let mut tables = Vec::with_capacity(spec.num_users);
    for (&actions, &states) in spec.action_cards.iter().zip(&spec.state_cards) {
        let mut table = Vec::with_capacity(states);
        for _ in 0..states {
            table.push((rest % actions as u64) as usize);
            rest /= actions as u64;
        }
        tables.push(table);
    }
    Ok(PureStrategy { tables })
}

/// Encodes a strategy back to its index; inverse of [`decode_strategy`].
pub fn encode_strategy(strategy: &PureStrategy, spec: &ProblemSpec) -> Result<u64> {
    if strategy.tables.len() != spec.num_users {
        return Err(Error::DimensionMismatch(format!(
            "strategy covers {} users, spec has {}",
            strategy.tables.len(),
            spec.num_users
        )));
    }
    let mut idx: u64 = 0;
    for (i, table) in strategy.tables.iter().enumerate().rev() {
        if table.len() != spec.state_cards[i] {
            return Err(Error::DimensionMismatch(format!(
                "user {i} table covers {} states, spec has {}",
                table.len(),
                spec.state_cards[i]
            )));
        }
        for &a in table.iter().rev() {
            if a >= spec.action_cards[i] {
                return Err(Error::IndexOutOfRange(format!(
                    "user {i} action {a} with |A_i| = {}",
                    spec.action_cards[i]
                )));
            }
            idx = idx * spec.action_cards[i] as u64 + a as u64;
        }
    }
    Ok(idx)
}

/// Expected penalty `r_{k,λ}^(m)` of strategy `m` under distribution `λ`.
pub fn expected_value(m: u64, k: usize, lambda: &Distribution, spec: &ProblemSpec) -> Result<f64> {
    if k > spec.penalty_count {
        return Err(Error::IndexOutOfRange(format!(
            "penalty index {k} with K = {}",
            spec.penalty_count
        )));
    }
    if lambda.len() != spec.num_states() {
        return Err(Error::DimensionMismatch(format!(
            "distribution over {} states, spec has {}",
            lambda.len(),
            spec.num_states()
        )));
    }
    let strategy = decode_strategy(m, spec)?;
    let mut r = 0.0;
    for (w, &pw) in lambda.pmf().iter().enumerate() {
        if pw == 0.0 {
            continue;
        }
        r += pw * spec.cost(k, strategy.joint_action(spec, w), w);
    }
    Ok(r)
}

/// All expected penalties for one distribution: `rewards[k][m] = r_{k,λ}^(m)`.
#[derive(Debug, Clone)]
pub struct StrategyTable {
    count: u64,
    rewards: Vec<Vec<f64>>,
}

impl StrategyTable {
    /// Strategy count `F`.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// `r_{k,λ}^(m)`.
    pub fn reward(&self, k: usize, m: u64) -> f64 {
        self.rewards[k][m as usize]
    }

    /// The full row `m ↦ r_{k,λ}^(m)` for one penalty index.
    pub fn row(&self, k: usize) -> &[f64] {
        &self.rewards[k]
    }

    /// Number of penalty rows (`K + 1`).
    pub fn penalty_rows(&self) -> usize {
        self.rewards.len()
    }
}

/// Builds the `(K+1) × F` expected-penalty matrix for `λ` by enumerating all
/// strategies (in parallel; each column is independent).
pub fn build_reward_matrix(lambda: &Distribution, spec: &ProblemSpec) -> Result<StrategyTable> {
    build_reward_matrix_with_cap(lambda, spec, DEFAULT_STRATEGY_CAP)
}

/// [`build_reward_matrix`] with an explicit strategy cap.
pub fn build_reward_matrix_with_cap(
    lambda: &Distribution,
    spec: &ProblemSpec,
    cap: u64,
) -> Result<StrategyTable> {
    let f = strategy_count_with_cap(spec, cap)?;
    if lambda.len() != spec.num_states() {
        return Err(Error::DimensionMismatch(format!(
            "distribution over {} states, spec has {}",
            lambda.len(),
            spec.num_states()
        )));
    }
    let rows = spec.penalty_count + 1;
    let states = spec.num_states();
    // Weighted per-state penalty lookup: contrib[k][a · |Ω| + ω] = λ(ω)·p_k(a, ω).
    let contrib: Vec<Vec<f64>> = (0..rows)
        .map(|k| {
            let table = &spec.cost_tables[k];
            table
                .iter()
                .enumerate()
                .map(|(idx, &p)| lambda.get(idx % states) * p)
                .collect()
        })
        .collect();
    let columns: Vec<Vec<f64>> = (0..f)
        .into_par_iter()
        .map(|m| {
            let strategy = decode_strategy(m, spec).expect("m < F by construction");
            let mut col = vec![0.0; rows];
            for w in 0..states {
                if lambda.get(w) == 0.0 {
                    continue;
                }
                let a = strategy.joint_action(spec, w);
                for (k, slot) in col.iter_mut().enumerate() {
                    *slot += contrib[k][a * states + w];
                }
            }
            col
        })
        .collect();
    let mut rewards = vec![vec![0.0; f as usize]; rows];
    for (m, col) in columns.iter().enumerate() {
        for (k, &v) in col.iter().enumerate() {
            rewards[k][m] = v;
        }
    }
    Ok(StrategyTable { count: f, rewards })
}
