//! The stationary baseline LP and its perturbation analysis.
//!
//! Given expected penalties `r_k^(m)` under a fixed distribution, the best
//! stationary randomized policy solves
//!
//! ```text
//!   minimize    Σ_m θ_m r_0^(m)
//!   subject to  Σ_m θ_m r_k^(m) ≤ c_k + x   (k = 1…K)
//!               Σ_m θ_m = 1,  θ ≥ 0
//! ```
//!
//! whose optimal value as a function of the slack perturbation `x ≥ 0` is
//! the convex, non-increasing curve `G(x)`; `G(0)` is the baseline optimum.
//! The approximation-gap bound compares the LP solved under a detected
//! covering-set member against the LP under the true limit through the
//! empirical Lipschitz constant of `G` near the origin.
//!
//! The solver is a dense two-phase simplex with Bland's anti-cycling rule —
//! instances here have at most a few thousand variables and a handful of
//! rows, and a self-contained solver keeps results bit-reproducible. A
//! brute-force vertex-enumeration oracle covers tiny instances for
//! cross-checking.

use crate::error::{Error, Result};
use crate::strategy::StrategyTable;

const EPS: f64 = 1e-9;
const PIVOT_EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 10_000;

/// The LP data: objective vector over strategies, `K` constraint rows, and
/// their right-hand sides. The probability-simplex constraint is implicit.
#[derive(Debug, Clone)]
pub struct LinearProgramInstance {
    pub objective: Vec<f64>,
    pub constraint_rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

impl LinearProgramInstance {
    pub fn new(
        objective: Vec<f64>,
        constraint_rows: Vec<Vec<f64>>,
        rhs: Vec<f64>,
    ) -> Result<Self> {
        if objective.is_empty() {
            return Err(Error::InvalidArgument("LP with no variables".into()));
        }
        if constraint_rows.len() != rhs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} constraint rows vs {} rhs entries",
                constraint_rows.len(),
                rhs.len()
            )));
        }
        if constraint_rows.iter().any(|r| r.len() != objective.len()) {
            return Err(Error::DimensionMismatch(
                "constraint row length differs from objective length".into(),
            ));
        }
        let finite = objective.iter().all(|v| v.is_finite())
            && rhs.iter().all(|v| v.is_finite())
            && constraint_rows.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("non-finite LP coefficient".into()));
        }
        Ok(Self {
            objective,
            constraint_rows,
            rhs,
        })
    }

    /// Instance for a reward table with constraint levels `c + x`.
    pub fn from_table(table: &StrategyTable, constraints: &[f64], x: f64) -> Result<Self> {
        if constraints.len() + 1 != table.penalty_rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} constraints vs {} penalty rows",
                constraints.len(),
                table.penalty_rows()
            )));
        }
        Self::new(
            table.row(0).to_vec(),
            (1..table.penalty_rows())
                .map(|k| table.row(k).to_vec())
                .collect(),
            constraints.iter().map(|&c| c + x).collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    /// Unreachable for simplex-constrained instances (the feasible set is a
    /// bounded polytope); reported rather than panicking if it ever occurs.
    Unbounded,
}

/// A solved LP. For non-optimal statuses `theta` is empty and `value` is
/// `+∞` (infeasible) or `−∞` (unbounded).
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub theta: Vec<f64>,
    pub value: f64,
    pub status: LpStatus,
}

impl LpSolution {
    fn infeasible() -> Self {
        Self {
            theta: Vec::new(),
            value: f64::INFINITY,
            status: LpStatus::Infeasible,
        }
    }

    fn unbounded() -> Self {
        Self {
            theta: Vec::new(),
            value: f64::NEG_INFINITY,
            status: LpStatus::Unbounded,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Indices with mass above `1e-9`. Basic optimal solutions carry at most
    /// `K + 1` of them.
    pub fn support(&self) -> Vec<usize> {
        self.theta
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > EPS)
            .map(|(i, _)| i)
            .collect()
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, j: usize) {
        let piv = self.rows[r][j];
        for v in self.rows[r].iter_mut() {
            *v /= piv;
        }
        self.rhs[r] /= piv;
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let factor = self.rows[i][j];
            if factor == 0.0 {
                continue;
            }
            for col in 0..self.rows[i].len() {
                let delta = factor * self.rows[r][col];
                self.rows[i][col] -= delta;
            }
            self.rhs[i] -= factor * self.rhs[r];
            // Keep the pivot column exactly canonical.
            self.rows[i][j] = 0.0;
        }
        self.basis[r] = j;
    }

    /// Minimizes `cost · x` over the current tableau with Bland's rule.
    /// Columns with `j ≥ col_limit` are barred from entering the basis.
    fn run(&mut self, cost: &[f64], col_limit: usize) -> Result<LpStatus> {
        for _ in 0..MAX_PIVOTS {
            // Reduced cost of column j under the current basis.
            let mut entering = None;
            for j in 0..col_limit {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j];
                for (i, &b) in self.basis.iter().enumerate() {
                    if cost[b] != 0.0 {
                        rc -= cost[b] * self.rows[i][j];
                    }
                }
                if rc < -EPS {
                    entering = Some(j);
                    break; // Bland: lowest eligible index.
                }
            }
            let Some(j) = entering else {
                return Ok(LpStatus::Optimal);
            };
            // Ratio test; ties broken by lowest basis variable index
            // (Bland's leaving rule).
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][j];
                if a > PIVOT_EPS {
                    let ratio = self.rhs[i] / a;
                    let better = match leaving {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - PIVOT_EPS
                                || (ratio < lr + PIVOT_EPS && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leaving else {
                return Ok(LpStatus::Unbounded);
            };
            self.pivot(r, j);
        }
        Err(Error::IterationCap(MAX_PIVOTS))
    }
}

/// Solves the instance with a two-phase dense simplex (Bland's rule; at most
/// [`MAX_PIVOTS`](constant@self) pivots per phase).
pub fn solve_lp(lp: &LinearProgramInstance) -> Result<LpSolution> {
    let f = lp.objective.len();
    let k = lp.constraint_rows.len();
    let m = k + 1;
    let slack_end = f + k;

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs: Vec<f64> = Vec::with_capacity(m);
    for (i, cr) in lp.constraint_rows.iter().enumerate() {
        let mut row = vec![0.0; slack_end];
        row[..f].copy_from_slice(cr);
        row[f + i] = 1.0;
        rows.push(row);
        rhs.push(lp.rhs[i]);
    }
    let mut sum_row = vec![0.0; slack_end];
    sum_row[..f].fill(1.0);
    rows.push(sum_row);
    rhs.push(1.0);

    // Normalize right-hand sides to be non-negative.
    for i in 0..m {
        if rhs[i] < 0.0 {
            rhs[i] = -rhs[i];
            for v in rows[i].iter_mut() {
                *v = -*v;
            }
        }
    }

    // Initial basis: a slack where its coefficient survived normalization as
    // +1, an artificial variable otherwise (the simplex row always needs one).
    let mut basis = vec![usize::MAX; m];
    for i in 0..k {
        if rows[i][f + i] > 0.5 {
            basis[i] = f + i;
        }
    }
    let mut ncols = slack_end;
    for i in 0..m {
        if basis[i] == usize::MAX {
            for (r, row) in rows.iter_mut().enumerate() {
                row.push(if r == i { 1.0 } else { 0.0 });
            }
            basis[i] = ncols;
            ncols += 1;
        }
    }

    let mut tab = Tableau { rows, rhs, basis };

    // Phase 1: minimize the sum of artificials.
    let mut phase1_cost = vec![0.0; ncols];
    for c in phase1_cost.iter_mut().skip(slack_end) {
        *c = 1.0;
    }
    match tab.run(&phase1_cost, ncols)? {
        LpStatus::Unbounded => return Ok(LpSolution::unbounded()),
        _ => {}
    }
    let artificial_mass: f64 = tab
        .basis
        .iter()
        .zip(&tab.rhs)
        .filter(|(&b, _)| b >= slack_end)
        .map(|(_, &v)| v)
        .sum();
    if artificial_mass > EPS {
        return Ok(LpSolution::infeasible());
    }

    // Drive remaining (zero-level) artificials out of the basis; rows with no
    // eligible pivot are redundant and dropped.
    let mut i = 0;
    while i < tab.basis.len() {
        if tab.basis[i] >= slack_end {
            match (0..slack_end).find(|&j| tab.rows[i][j].abs() > PIVOT_EPS) {
                Some(j) => tab.pivot(i, j),
                None => {
                    tab.rows.remove(i);
                    tab.rhs.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    // Phase 2: the true objective over the original and slack columns only.
    let mut cost = vec![0.0; ncols];
    cost[..f].copy_from_slice(&lp.objective);
    match tab.run(&cost, slack_end)? {
        LpStatus::Unbounded => return Ok(LpSolution::unbounded()),
        _ => {}
    }

    let mut theta = vec![0.0; f];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < f {
            theta[b] = tab.rhs[i].max(0.0);
        }
    }
    let value = theta
        .iter()
        .zip(&lp.objective)
        .map(|(&t, &c)| t * c)
        .sum();
    Ok(LpSolution {
        theta,
        value,
        status: LpStatus::Optimal,
    })
}

/// Exhaustive basic-solution enumeration for tiny instances (`F ≤ 8`,
/// `K ≤ 3`): every square basis system of the standard form is solved and
/// the best feasible vertex returned. Used as an independent check on the
/// simplex.
pub fn brute_force_lp_oracle(lp: &LinearProgramInstance) -> Result<LpSolution> {
    let f = lp.objective.len();
    let k = lp.constraint_rows.len();
    if f > 8 || k > 3 {
        return Err(Error::OracleCapExceeded { f, k });
    }
    let n = f + k;
    let m = k + 1;

    // Standard-form matrix: k inequality rows with unit slacks, then Σθ = 1.
    let mut full = vec![vec![0.0; n]; m];
    let mut b = vec![0.0; m];
    for i in 0..k {
        full[i][..f].copy_from_slice(&lp.constraint_rows[i]);
        full[i][f + i] = 1.0;
        b[i] = lp.rhs[i];
    }
    full[k][..f].fill(1.0);
    b[k] = 1.0;

    let mut best: Option<LpSolution> = None;
    let mut combo: Vec<usize> = (0..m).collect();
    loop {
        let mat: Vec<Vec<f64>> = (0..m)
            .map(|i| combo.iter().map(|&j| full[i][j]).collect())
            .collect();
        if let Some(x) = solve_square(mat, b.clone()) {
            if x.iter().all(|&v| v >= -1e-12) {
                let mut theta = vec![0.0; f];
                for (pos, &col) in combo.iter().enumerate() {
                    if col < f {
                        theta[col] = x[pos].max(0.0);
                    }
                }
                let value: f64 = theta
                    .iter()
                    .zip(&lp.objective)
                    .map(|(&t, &c)| t * c)
                    .sum();
                if best.as_ref().map_or(true, |s| value < s.value) {
                    best = Some(LpSolution {
                        theta,
                        value,
                        status: LpStatus::Optimal,
                    });
                }
            }
        }
        // Advance to the next m-combination of {0, …, n−1} in lexicographic
        // order; stop after the last one.
        let mut pos = m;
        while pos > 0 {
            pos -= 1;
            if combo[pos] < n - (m - pos) {
                combo[pos] += 1;
                for later in pos + 1..m {
                    combo[later] = combo[later - 1] + 1;
                }
                break;
            }
            if pos == 0 {
                return Ok(best.unwrap_or_else(LpSolution::infeasible));
            }
        }
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot_row = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .expect("finite LP coefficients")
        })?;
        if a[pivot_row][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                let delta = factor * a[col][c];
                a[row][c] -= delta;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in row + 1..n {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// `G(x)`: the LP value with every constraint relaxed to `c_k + x`.
pub fn perturbed_value(x: f64, table: &StrategyTable, constraints: &[f64]) -> Result<LpSolution> {
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "perturbation x = {x} must be non-negative"
        )));
    }
    solve_lp(&LinearProgramInstance::from_table(table, constraints, x)?)
}

/// Samples `(x, G(x))` on an evenly spaced grid over `[0, x_max]`.
pub fn g_curve(
    table: &StrategyTable,
    constraints: &[f64],
    x_max: f64,
    grid: usize,
) -> Result<Vec<(f64, f64)>> {
    if grid < 2 || !(x_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "G grid needs x_max > 0 and at least 2 points (got x_max = {x_max}, grid = {grid})"
        )));
    }
    let mut curve = Vec::with_capacity(grid);
    for i in 0..grid {
        let x = x_max * i as f64 / (grid - 1) as f64;
        let sol = perturbed_value(x, table, constraints)?;
        if !sol.is_optimal() {
            return Err(Error::InfeasibleAtOrigin);
        }
        curve.push((x, sol.value));
    }
    Ok(curve)
}

/// Empirical Lipschitz constant of `G` on `[0, x_max]`: the steepest slope
/// between adjacent grid points.
pub fn estimate_lipschitz(
    table: &StrategyTable,
    constraints: &[f64],
    x_max: f64,
    grid: usize,
) -> Result<f64> {
    let curve = g_curve(table, constraints, x_max, grid)?;
    let mut c_hat = 0.0f64;
    for pair in curve.windows(2) {
        let (x0, g0) = pair[0];
        let (x1, g1) = pair[1];
        c_hat = c_hat.max((g1 - g0).abs() / (x1 - x0));
    }
    Ok(c_hat)
}

/// Default perturbation range for the Lipschitz estimate: half the smallest
/// headroom `c_k − min_m r_k^(m)` (falling back to 1 when no constraint has
/// positive headroom or `K = 0`).
pub fn default_lipschitz_range(table: &StrategyTable, constraints: &[f64]) -> f64 {
    let mut span = f64::INFINITY;
    for (k, &c) in constraints.iter().enumerate() {
        let least = table
            .row(k + 1)
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        span = span.min(c - least);
    }
    if span.is_finite() && span > 0.0 {
        0.5 * span
    } else {
        1.0
    }
}

/// Theorem-2 style approximation gap `(ĉ + 1) · b_max · (d + ν)` between
/// the LP under a detected member at distance `d` and the LP under the true
/// limit, with stationarity tolerance `ν`.
pub fn theorem2_gap(d: f64, nu: f64, b_max: f64, c_hat: f64) -> f64 {
    (c_hat + 1.0) * b_max * (d + nu)
}
