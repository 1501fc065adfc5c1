//! Measures the maximum-likelihood detector's error rate as the window
//! grows, against the two readings of the error exponent.
//!
//! The truth is the covering member nearest the limit; each trial draws a
//! window of iid joint states from it and asks the detector to name the
//! member. The two bound variants differ in where the likelihood-ratio
//! range constant sits in the exponent.
//!
//! ```text
//!   cargo run --example detection_windows
//! ```

use adpp::analysis::{detection_error_bound, divergence_series, zeta_delta, BoundVariant};
use adpp::engine::detect_distribution;
use adpp::harness::ScenarioIv;
use adpp::problem::{metric_entropy, nearest_member};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> adpp::Result<()> {
    let scenario = ScenarioIv::default();
    let cover = scenario.cover()?;
    let (i_star, _) = nearest_member(&cover, &scenario.limit())?;
    let truth = cover.members()[i_star].clone();

    let zeta = zeta_delta(&cover);
    let entropy = metric_entropy(&cover);
    // Worst-case divergence margin between the truth and any other member,
    // evaluated on the stationary schedule.
    let stationary = scenario.stationary_at(i_star, 2)?;
    let d_tau = divergence_series(&stationary, &cover, 0..1)?.d_tau.first().copied();
    // D_tau = min_j E log(P_j / P_i*) is <= 0 under the truth (Gibbs); the
    // bounds only use its square.
    println!(
        "truth = member {i_star}, D_tau = {:.4}, zeta = {zeta:.4}, H = ln {} = {entropy:.4}",
        d_tau.unwrap_or(f64::INFINITY),
        cover.len()
    );

    let trials = 4000;
    let mut rng = ChaCha8Rng::seed_from_u64(271828);
    println!("  w    empirical  printed      hoeffding");
    for w in [5usize, 10, 20, 40] {
        let mut errors = 0usize;
        for _ in 0..trials {
            let window: Vec<usize> = (0..w).map(|_| truth.sample_with(rng.gen())).collect();
            if detect_distribution(&window, &cover)? != i_star {
                errors += 1;
            }
        }
        let printed = detection_error_bound(d_tau, w, zeta, entropy, BoundVariant::Printed);
        let hoeffding = detection_error_bound(d_tau, w, zeta, entropy, BoundVariant::Hoeffding);
        println!(
            "  {:<5}{:<11.4}{:<13.3e}{:.3e}",
            w,
            errors as f64 / trials as f64,
            printed.clipped,
            hoeffding.clipped
        );
    }
    Ok(())
}
