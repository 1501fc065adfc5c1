//! Solves the baseline LP for the bundled three-sensor scenario and prints
//! the optimum, its support, and the constraint-relaxation analysis that
//! feeds the approximation gap.
//!
//! ```text
//!   cargo run --example solve_baseline
//! ```

use adpp::harness::ScenarioIv;
use adpp::lp::{
    default_lipschitz_range, estimate_lipschitz, g_curve, solve_lp, theorem2_gap,
    LinearProgramInstance,
};
use adpp::problem::nearest_member;
use adpp::strategy::build_reward_matrix;

fn main() -> adpp::Result<()> {
    let scenario = ScenarioIv::default();
    let spec = scenario.problem();
    let limit = scenario.limit();
    let cover = scenario.cover()?;

    let table = build_reward_matrix(&limit, &spec)?;
    println!("strategies: F = {}", table.count());

    let lp = LinearProgramInstance::from_table(&table, &spec.constraints, 0.0)?;
    let solution = solve_lp(&lp)?;
    println!("status: {:?}", solution.status);
    println!("optimal cost p(opt) = {:+.9}", solution.value);
    println!("optimal utility     = {:+.9}", -solution.value);
    for m in solution.support() {
        println!("  theta[{m}] = {:.9}", solution.theta[m]);
    }

    // How quickly the optimum degrades when every constraint is tightened by
    // x: G(x) on a grid, its steepest slope c_hat, and the resulting
    // approximation gap for the member nearest the limit.
    let x_max = default_lipschitz_range(&table, &spec.constraints);
    let curve = g_curve(&table, &spec.constraints, x_max, 9)?;
    println!("relaxation curve G(x) on [0, {x_max:.4}]:");
    for (x, g) in &curve {
        println!("  G({x:.4}) = {g:+.9}");
    }
    let c_hat = estimate_lipschitz(&table, &spec.constraints, x_max, 64)?;
    let (i_star, d) = nearest_member(&cover, &limit)?;
    let b_max = (0..=spec.penalty_count).map(|k| spec.b_max(k)).fold(0.0, f64::max);
    println!("Lipschitz estimate c_hat = {c_hat:.6}");
    println!(
        "nearest member i* = {i_star}, distance {d:.3e}, gap (c_hat+1)*b_max*(d+nu) = {:.3e}",
        theorem2_gap(d, 0.0, b_max, c_hat)
    );
    Ok(())
}
