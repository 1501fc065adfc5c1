//! Shows how joint pure strategies are indexed: every deterministic map
//! from joint state to joint action gets one column, factored across users,
//! and the reward matrix is the per-slot expectation of each penalty under
//! a given state distribution.
//!
//! ```text
//!   cargo run --example strategy_table
//! ```

use adpp::harness::ScenarioIv;
use adpp::strategy::{build_reward_matrix, decode_strategy, strategy_count};

fn main() -> adpp::Result<()> {
    let scenario = ScenarioIv::default();
    let spec = scenario.problem();

    let f = strategy_count(&spec)?;
    println!(
        "joint strategies: prod_i |A_i|^|Omega| = 2^4 * 2^4 * 2^4 ... = {f}"
    );

    // Decode one strategy index into its per-user action maps.
    let m = 3276u64;
    let strategy = decode_strategy(m, &spec)?;
    println!("strategy {m} factors into per-user lookup tables:");
    for (i, table) in strategy.tables().iter().enumerate() {
        println!("  user {i}: private state -> action {table:?}");
    }

    // Expected penalties per strategy under the limit distribution.
    let table = build_reward_matrix(&scenario.limit(), &spec)?;
    println!("reward matrix: {} penalty rows x {} strategies", spec.penalty_count + 1, table.count());
    for k in 0..=spec.penalty_count {
        let row = table.row(k);
        println!(
            "  r_{k}[{m}] = {:+.6}   (range over all strategies: [{:+.4}, {:+.4}])",
            row[m as usize],
            row.iter().cloned().fold(f64::INFINITY, f64::min),
            row.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        );
    }
    Ok(())
}
