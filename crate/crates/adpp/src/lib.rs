//! Approximate drift-plus-penalty (ADPP) control for distributed constrained
//! stochastic optimization under independent, non-stationary states.
//!
//! `N` users each observe a private state `ω_i(t)` and pick an action
//! `a_i(t)`; the joint choice incurs a system penalty `p_0(a, ω)` and `K`
//! constraint penalties `p_k(a, ω)` that must satisfy long-run averages
//! `limsup (1/t) Σ E[p_k] ≤ c_k`. States are independent across users and
//! slots but their joint distribution `π_t` drifts over time toward a limit
//! `π`. The controller sees states only through a delay `D` and never learns
//! `π_t` exactly: it carries a finite covering set `{P_1, …, P_M}` and
//! maximum-likelihood-detects the nearest member from a window of `w`
//! delayed observations.
//!
//! The per-slot control is drift-plus-penalty over the finite space of pure
//! strategies (maps from joint state to joint action):
//!
//! ```text
//!   m*(t) = argmin_m  V · r_0^(m) + Σ_k Q_k(t) · r_k^(m)
//!   Q_k(t+1) = max{ Q_k(t) + p_k(t − D) − c_k, 0 }
//! ```
//!
//! where `r_k^(m)` is the expected penalty of strategy `m` under the detected
//! distribution and `Q_k` are virtual queues fed by delayed penalties.
//!
//! The crate provides:
//!
//! - [`problem`]: problem instances, distributions, non-stationary schedules,
//!   covering sets;
//! - [`strategy`]: mixed-radix enumeration of pure strategies and expected
//!   penalty vectors;
//! - [`lp`]: the stationary baseline linear program and its perturbation
//!   analysis (Lipschitz estimate, approximation-gap bound);
//! - [`engine`]: the ADPP simulation loop (detection, strategy selection,
//!   queue updates);
//! - [`analysis`]: PAC tail bounds, detection error bounds, β-mixing
//!   estimation, and convergence-gap accounting over trace ensembles;
//! - [`harness`]: runnable scenario configuration, ensemble execution, and
//!   CSV/JSON artifact handling.

pub mod analysis;
pub mod engine;
mod error;
pub mod harness;
pub mod lp;
pub mod problem;
pub mod strategy;

pub use error::{Error, Result};
