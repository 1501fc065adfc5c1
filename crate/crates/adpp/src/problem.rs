//! Problem instances and the non-stationary state machinery.
//!
//! A problem couples `N` users with finite private state spaces `Ω_i` and
//! action spaces `A_i`. Joint states and actions are flattened to single
//! indices in mixed-radix order with user 1 least significant:
//!
//! ```text
//!   ω = ω_1 + |Ω_1|·ω_2 + |Ω_1||Ω_2|·ω_3 + …
//! ```
//!
//! Every module in the crate shares this enumeration, so a pmf over joint
//! states is a dense vector and a penalty table is a dense `|A| × |Ω|` array.
//!
//! States evolve independently across slots but non-stationarily: a
//! [`DistributionSchedule`] produces `π_t` for each slot and converges in L1
//! to a limit `π`. The controller never sees `π_t`; it detects the nearest
//! member of a finite [`CoveringSet`] `{P_1, …, P_M}` whose radius `δ`
//! bounds `min_j ||π − P_j||_1`.

use crate::error::{Error, Result};
use rand::Rng;

/// A probability mass function over a finite index space.
///
/// Entries are non-negative and sum to 1 within `1e-12`; both are enforced
/// at construction so downstream code can assume a valid pmf.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pmf: Vec<f64>,
}

impl Distribution {
    /// Builds a distribution from raw weights, validating non-negativity and
    /// normalization.
    pub fn new(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::InvalidDistribution("empty pmf".into()));
        }
        if let Some(&bad) = pmf.iter().find(|&&p| !(p >= 0.0)) {
            return Err(Error::InvalidDistribution(format!(
                "negative or NaN entry {bad}"
            )));
        }
        let sum: f64 = pmf.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {sum}, expected 1 within 1e-12"
            )));
        }
        Ok(Self { pmf })
    }

    /// Point mass on `index` over `n` states.
    pub fn point_mass(n: usize, index: usize) -> Result<Self> {
        if index >= n {
            return Err(Error::IndexOutOfRange(format!(
                "point mass index {index} over {n} states"
            )));
        }
        let mut pmf = vec![0.0; n];
        pmf[index] = 1.0;
        Ok(Self { pmf })
    }

    /// Uniform distribution over `n` states.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDistribution("empty pmf".into()));
        }
        Ok(Self {
            pmf: vec![1.0 / n as f64; n],
        })
    }

    /// Product distribution over the joint space of the given factors, in
    /// mixed-radix order with the first factor least significant.
    pub fn product(factors: &[Distribution]) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidDistribution("empty factor list".into()));
        }
        let total: usize = factors.iter().map(|f| f.len()).product();
        let mut pmf = vec![0.0; total];
        for (joint, slot) in pmf.iter_mut().enumerate() {
            let mut rest = joint;
            let mut p = 1.0;
            for f in factors {
                p *= f.pmf[rest % f.len()];
                rest /= f.len();
            }
            *slot = p;
        }
        // Renormalize away accumulated rounding so the constructor invariant
        // holds exactly as documented.
        let sum: f64 = pmf.iter().sum();
        for p in &mut pmf {
            *p /= sum;
        }
        Self::new(pmf)
    }

    /// Convex combination `(1 − w)·a + w·b`.
    pub fn blend(a: &Distribution, b: &Distribution, w: f64) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "blend of pmfs with lengths {} and {}",
                a.len(),
                b.len()
            )));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidArgument(format!(
                "blend weight {w} outside [0, 1]"
            )));
        }
        let pmf = a
            .pmf
            .iter()
            .zip(&b.pmf)
            .map(|(&pa, &pb)| (1.0 - w) * pa + w * pb)
            .collect();
        Self::new(pmf)
    }

    pub fn len(&self) -> usize {
        self.pmf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pmf.is_empty()
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn get(&self, index: usize) -> f64 {
        self.pmf[index]
    }

    /// Inverse-CDF sample: the smallest index whose cumulative mass exceeds
    /// `u ∈ [0, 1)`. Consumes exactly the one uniform variate it is given,
    /// which keeps sampling reproducible across implementations.
    pub fn sample_with(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, &p) in self.pmf.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // Rounding can leave acc marginally below 1; fall back to the last
        // index with positive mass.
        self.pmf
            .iter()
            .rposition(|&p| p > 0.0)
            .unwrap_or(self.pmf.len() - 1)
    }
}

/// L1 distance `Σ_ω |a(ω) − b(ω)|` between two pmfs on the same index space.
pub fn l1_distance(a: &Distribution, b: &Distribution) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "L1 distance between pmfs with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.pmf
        .iter()
        .zip(&b.pmf)
        .map(|(&pa, &pb)| (pa - pb).abs())
        .sum())
}

/// A complete problem instance: spaces, penalty tables, and constraints.
///
/// `cost_tables[k]` holds `p_k(α, ω)` row-major by joint action, i.e. entry
/// `α · |Ω| + ω`. Table 0 is the objective penalty `p_0`; tables `1..=K`
/// feed the constraints `(1/t) Σ E[p_k] ≤ c_k`. `bounds[k] = (p_min,k,
/// p_max,k)` are declared envelopes used by the analysis layer; the
/// validator checks every entry against them.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub num_users: usize,
    pub state_cards: Vec<usize>,
    pub action_cards: Vec<usize>,
    pub penalty_count: usize,
    pub cost_tables: Vec<Vec<f64>>,
    pub constraints: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
}

impl ProblemSpec {
    /// Joint state space size `|Ω| = Π_i |Ω_i|`.
    pub fn num_states(&self) -> usize {
        self.state_cards.iter().product()
    }

    /// Joint action space size `|A| = Π_i |A_i|`.
    pub fn num_actions(&self) -> usize {
        self.action_cards.iter().product()
    }

    /// Penalty `p_k(α, ω)` by joint indices.
    pub fn cost(&self, k: usize, action: usize, state: usize) -> f64 {
        self.cost_tables[k][action * self.num_states() + state]
    }

    /// Range `u_max,k = p_max,k − p_min,k` of penalty `k`.
    pub fn u_max(&self, k: usize) -> f64 {
        self.bounds[k].1 - self.bounds[k].0
    }

    /// Magnitude envelope `b_max,k = max(|p_max,k|, |p_min,k|)`.
    pub fn b_max(&self, k: usize) -> f64 {
        self.bounds[k].0.abs().max(self.bounds[k].1.abs())
    }

    /// Splits a joint state index into per-user digits (user 1 first).
    pub fn decode_state(&self, mut state: usize) -> Vec<usize> {
        let mut digits = Vec::with_capacity(self.num_users);
        for &card in &self.state_cards {
            digits.push(state % card);
            state /= card;
        }
        digits
    }

    /// Splits a joint action index into per-user digits (user 1 first).
    pub fn decode_action(&self, mut action: usize) -> Vec<usize> {
        let mut digits = Vec::with_capacity(self.num_users);
        for &card in &self.action_cards {
            digits.push(action % card);
            action /= card;
        }
        digits
    }

    /// Joint state index from per-user digits.
    pub fn encode_state(&self, digits: &[usize]) -> usize {
        let mut idx = 0;
        for (&d, &card) in digits.iter().zip(&self.state_cards).rev() {
            idx = idx * card + d;
        }
        idx
    }

    /// Joint action index from per-user digits.
    pub fn encode_action(&self, digits: &[usize]) -> usize {
        let mut idx = 0;
        for (&d, &card) in digits.iter().zip(&self.action_cards).rev() {
            idx = idx * card + d;
        }
        idx
    }
}

/// Checks a [`ProblemSpec`] against its structural invariants. Returns one
/// message per violation; an empty report means the spec is well-formed.
pub fn validate_problem(spec: &ProblemSpec) -> Vec<String> {
    let mut report = Vec::new();
    if spec.num_users == 0 {
        report.push("user count is zero".to_string());
    }
    if spec.state_cards.len() != spec.num_users {
        report.push(format!(
            "state cardinality count mismatch: expected {}, found {}",
            spec.num_users,
            spec.state_cards.len()
        ));
    }
    if spec.action_cards.len() != spec.num_users {
        report.push(format!(
            "action cardinality count mismatch: expected {}, found {}",
            spec.num_users,
            spec.action_cards.len()
        ));
    }
    if spec.state_cards.iter().any(|&c| c == 0) {
        report.push("some state space is empty".to_string());
    }
    if spec.action_cards.iter().any(|&c| c == 0) {
        report.push("some action space is empty".to_string());
    }
    let states = spec
        .state_cards
        .iter()
        .try_fold(1usize, |acc, &c| acc.checked_mul(c));
    let actions = spec
        .action_cards
        .iter()
        .try_fold(1usize, |acc, &c| acc.checked_mul(c));
    let (states, actions) = match (states, actions) {
        (Some(s), Some(a)) => (s, a),
        _ => {
            report.push("joint space size overflows".to_string());
            return report;
        }
    };
    if spec.constraints.len() != spec.penalty_count {
        report.push(format!(
            "constraint count mismatch: expected {} entries, found {}",
            spec.penalty_count,
            spec.constraints.len()
        ));
    }
    if spec.cost_tables.len() != spec.penalty_count + 1 {
        report.push(format!(
            "penalty table count mismatch: expected {}, found {}",
            spec.penalty_count + 1,
            spec.cost_tables.len()
        ));
    }
    if spec.bounds.len() != spec.penalty_count + 1 {
        report.push(format!(
            "bound count mismatch: expected {}, found {}",
            spec.penalty_count + 1,
            spec.bounds.len()
        ));
    }
    for (k, table) in spec.cost_tables.iter().enumerate() {
        if table.len() != states * actions {
            report.push(format!(
                "table {k} size mismatch: expected {} entries, found {}",
                states * actions,
                table.len()
            ));
            continue;
        }
        let Some(&(lo, hi)) = spec.bounds.get(k) else {
            continue;
        };
        if lo > hi {
            report.push(format!("bound violation: p_min,{k} = {lo} exceeds p_max,{k} = {hi}"));
        }
        for (idx, &v) in table.iter().enumerate() {
            if !v.is_finite() {
                report.push(format!("table {k} entry {idx} is not finite"));
            } else if v < lo - 1e-12 || v > hi + 1e-12 {
                report.push(format!(
                    "bound violation: table {k} entry {idx} = {v} outside [{lo}, {hi}]"
                ));
            }
        }
    }
    report
}

/// The deterministic transient part of a schedule: how `π_t` differs from
/// the limit `π` before convergence.
#[derive(Debug, Clone)]
pub enum TransientRule {
    /// `π_t = π` for all `t`.
    Stationary,
    /// Cycles through `anchors` with a geometrically vanishing weight:
    ///
    /// ```text
    ///   π_t = (1 − ρ^t)·π + ρ^t·P_(t mod M)
    /// ```
    GeometricBlend {
        anchors: Vec<Distribution>,
        rho: f64,
    },
}

/// The sequence `{π_t}`, its limit `π`, and the slot horizon.
///
/// The schedule also declares a *convergence envelope*: a non-increasing
/// upper bound on `||π_t − π||_1` that tends to zero, certifying the
/// convergence assumption without per-slot search over the rule.
#[derive(Debug, Clone)]
pub struct DistributionSchedule {
    limit: Distribution,
    rule: TransientRule,
    horizon: usize,
    anchor_span: f64,
}

impl DistributionSchedule {
    pub fn new(limit: Distribution, rule: TransientRule, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("zero-slot horizon".into()));
        }
        let anchor_span = match &rule {
            TransientRule::Stationary => 0.0,
            TransientRule::GeometricBlend { anchors, rho } => {
                if anchors.is_empty() {
                    return Err(Error::InvalidArgument(
                        "geometric blend needs at least one anchor".into(),
                    ));
                }
                if !(*rho > 0.0 && *rho < 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "blend rate rho = {rho} outside (0, 1)"
                    )));
                }
                let mut span = 0.0f64;
                for a in anchors {
                    span = span.max(l1_distance(a, &limit)?);
                }
                span
            }
        };
        Ok(Self {
            limit,
            rule,
            horizon,
            anchor_span,
        })
    }

    pub fn limit(&self) -> &Distribution {
        &self.limit
    }

    pub fn rule(&self) -> &TransientRule {
        &self.rule
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// The distribution governing slot `t`.
    pub fn pmf_at(&self, t: usize) -> Result<Distribution> {
        if t >= self.horizon {
            return Err(Error::HorizonExceeded {
                t,
                horizon: self.horizon,
            });
        }
        match &self.rule {
            TransientRule::Stationary => Ok(self.limit.clone()),
            TransientRule::GeometricBlend { anchors, rho } => {
                let w = rho.powf(t as f64);
                Distribution::blend(&self.limit, &anchors[t % anchors.len()], w)
            }
        }
    }

    /// Declared non-increasing upper bound on `||π_t − π||_1`.
    ///
    /// For the geometric blend this is `ρ^t · max_j ||P_j − π||_1`, which
    /// dominates the true deviation `ρ^t · ||P_(t mod M) − π||_1`.
    pub fn deviation_envelope(&self, t: usize) -> f64 {
        match &self.rule {
            TransientRule::Stationary => 0.0,
            TransientRule::GeometricBlend { rho, .. } => {
                rho.powf(t as f64) * self.anchor_span
            }
        }
    }

    /// Draws a joint state from `π_t` by inverse CDF over the fixed state
    /// enumeration order, consuming exactly one uniform variate.
    pub fn sample_state<R: Rng>(&self, t: usize, rng: &mut R) -> Result<usize> {
        let pmf = self.pmf_at(t)?;
        Ok(pmf.sample_with(rng.gen::<f64>()))
    }
}

/// A finite δ-covering `{P_1, …, P_M}` of the distribution family, with
/// likelihood envelopes `0 < β_δ < α_δ` bounding every nonzero member entry.
#[derive(Debug, Clone)]
pub struct CoveringSet {
    members: Vec<Distribution>,
    radius: f64,
    floor: f64,
    ceiling: f64,
}

impl CoveringSet {
    /// Builds a cover, deriving the tightest valid `(β_δ, α_δ)` from the
    /// members themselves (a hair outside the extreme nonzero entries).
    pub fn new(members: Vec<Distribution>, radius: f64) -> Result<Self> {
        let (lo, hi) = Self::entry_range(&members)?;
        Self::with_bounds(members, radius, lo * (1.0 - 1e-9), hi * (1.0 + 1e-9))
    }

    /// Builds a cover with explicit likelihood envelopes.
    pub fn with_bounds(
        members: Vec<Distribution>,
        radius: f64,
        floor: f64,
        ceiling: f64,
    ) -> Result<Self> {
        let (lo, hi) = Self::entry_range(&members)?;
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cover radius {radius} must be positive"
            )));
        }
        if !(floor > 0.0 && floor < ceiling) {
            return Err(Error::InvalidArgument(format!(
                "likelihood envelope ({floor}, {ceiling}) must satisfy 0 < floor < ceiling"
            )));
        }
        if lo <= floor || hi >= ceiling {
            return Err(Error::InvalidArgument(format!(
                "member entries span [{lo}, {hi}], not strictly inside ({floor}, {ceiling})"
            )));
        }
        Ok(Self {
            members,
            radius,
            floor,
            ceiling,
        })
    }

    fn entry_range(members: &[Distribution]) -> Result<(f64, f64)> {
        if members.is_empty() {
            return Err(Error::EmptyCover);
        }
        let dim = members[0].len();
        if members.iter().any(|m| m.len() != dim) {
            return Err(Error::DimensionMismatch(
                "cover members on different index spaces".into(),
            ));
        }
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for m in members {
            for &p in m.pmf() {
                if p > 0.0 {
                    lo = lo.min(p);
                    hi = hi.max(p);
                }
            }
        }
        if !lo.is_finite() {
            return Err(Error::InvalidDistribution(
                "cover members have no positive mass".into(),
            ));
        }
        Ok((lo, hi))
    }

    pub fn members(&self) -> &[Distribution] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Cover radius δ.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Likelihood floor β_δ.
    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Likelihood ceiling α_δ.
    pub fn ceiling(&self) -> f64 {
        self.ceiling
    }

    /// Whether `target` lies within radius δ of some member.
    pub fn covers(&self, target: &Distribution) -> Result<bool> {
        let (_, d) = nearest_member(self, target)?;
        Ok(d < self.radius)
    }

    /// Per-member log-pmfs for likelihood scoring; zero entries map to −∞.
    pub fn log_pmfs(&self) -> Vec<Vec<f64>> {
        self.members
            .iter()
            .map(|m| {
                m.pmf()
                    .iter()
                    .map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
                    .collect()
            })
            .collect()
    }
}

/// The member nearest to `target` in L1, with its distance. Ties break to
/// the lowest index.
pub fn nearest_member(cover: &CoveringSet, target: &Distribution) -> Result<(usize, f64)> {
    if cover.is_empty() {
        return Err(Error::EmptyCover);
    }
    let mut best = (0usize, f64::INFINITY);
    for (j, member) in cover.members().iter().enumerate() {
        let d = l1_distance(member, target)?;
        if d < best.1 {
            best = (j, d);
        }
    }
    Ok(best)
}

/// Metric entropy `ln M_δ` of the cover.
pub fn metric_entropy(cover: &CoveringSet) -> f64 {
    (cover.len() as f64).ln()
}
