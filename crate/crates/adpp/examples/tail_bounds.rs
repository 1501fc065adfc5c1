//! Compares the blocking-based tail bound against the empirical tail of the
//! time-averaged constraint penalties, at several accuracies and under both
//! bound variants.
//!
//! ```text
//!   cargo run --example tail_bounds
//! ```

use adpp::analysis::{
    default_anchor_grid, empirical_tail, estimate_beta_one, pac_tail_bound, time_average,
    BoundVariant,
};
use adpp::harness::reproduce::blocking_parameter;
use adpp::harness::{run_ensemble, ScenarioIv};

fn main() -> adpp::Result<()> {
    let scenario = ScenarioIv {
        delay: 5,
        window: 20,
        horizon: 1000,
        runs: 200,
        ..ScenarioIv::default()
    };
    let spec = scenario.problem();
    let ensemble = run_ensemble(
        &spec,
        &scenario.schedule()?,
        &scenario.cover()?,
        &scenario.engine(50.0, 23),
        scenario.runs,
    )?;

    let t = ensemble.horizon();
    let u_t = blocking_parameter(t); // largest divisor of t with u_t^2 <= t
    let anchors = default_anchor_grid(scenario.delay + scenario.window, t, u_t, 16);
    println!("t = {t}, blocking parameter u_t = {u_t}, v_t = {}", t / u_t);
    println!("  k  eps    empirical  printed    hoeffding");
    for k in 1..=spec.penalty_count {
        let beta = estimate_beta_one(&ensemble, k, &[u_t], &anchors)?.beta_hat[0];
        let c_k = spec.constraints[k - 1];
        let mean_gap = time_average(&ensemble, k, t)?.mean - c_k;
        for epsilon in [0.02, 0.05, 0.1] {
            if epsilon < mean_gap {
                println!("  {k}  {epsilon:<5} (skipped: below the mean gap {mean_gap:.4})");
                continue;
            }
            let empirical = empirical_tail(&ensemble, k, t, epsilon, c_k)?;
            let printed =
                pac_tail_bound(epsilon, t, u_t, beta, spec.u_max(k), mean_gap, BoundVariant::Printed)?;
            let hoeffding = pac_tail_bound(
                epsilon,
                t,
                u_t,
                beta,
                spec.u_max(k),
                mean_gap,
                BoundVariant::Hoeffding,
            )?;
            println!(
                "  {k}  {epsilon:<5}  {empirical:<9.4}  {:<9.3e}  {:.3e}",
                printed.clipped, hoeffding.clipped
            );
        }
    }
    println!("(a clipped value of 1 means the bound is vacuous at this horizon)");
    Ok(())
}
