//! The built-in `paper-sec4` scenario: three sensors reporting to a fusion
//! center over a shared collision channel.
//!
//! Each sensor `i` observes a private state `ω_i ∈ {0,1,2,3}` (how much its
//! reading matters right now) and either transmits (`α_i = 1`, costing 1 watt)
//! or stays silent. The fusion center's utility and the power penalties are
//!
//! ```text
//!   u_0(α, ω) = min{ α₁ω₁/10 + (α₂ω₂ + α₃ω₃)/20, 1 }      p_0 = −u_0
//!   p_i(α, ω) = α_i                                        c_i = 1/3
//! ```
//!
//! so sensor 1's readings are twice as valuable, and each node may transmit
//! at most a third of the time on average. States are i.i.d. across sensors
//! with limiting marginal `(0.1, 0.7, 0.1, 0.1)`; the default schedule starts
//! at a rotating mixture of the covering members and decays geometrically
//! onto the limit.
//!
//! The default eight-member covering set takes the limit itself plus the
//! seven products in which every sensor's marginal has its peak moved off
//! state 1 (to state 0 or state 2). Keeping the peaks distinct per member is
//! what lets a 40-sample window separate them reliably; gentler perturbations
//! leave the members statistically indistinguishable at this window length
//! and detection never locks on.

use crate::engine::EngineConfig;
use crate::error::Result;
use crate::problem::{CoveringSet, Distribution, DistributionSchedule, ProblemSpec, TransientRule};

/// Name under which the bundled scenario is selectable in configs and CLI.
pub const PAPER_SEC4: &str = "paper-sec4";

/// The bundled scenario with its tunable knobs. `Default` reproduces the
/// reference setup: `D = 10`, `w = 40`, `T = 5000`, `R = 200`, `V ∈ {5, 50}`.
#[derive(Debug, Clone)]
pub struct ScenarioIv {
    /// Feedback delay `D`.
    pub delay: usize,
    /// Detection window `w`.
    pub window: usize,
    /// Slots per run `T`.
    pub horizon: usize,
    /// Monte Carlo runs `R`.
    pub runs: usize,
    /// Drift-penalty weights to sweep.
    pub v_list: Vec<f64>,
    /// Covering radius `δ`.
    pub radius: f64,
    /// Geometric decay rate of the transient schedule.
    pub rho: f64,
}

impl Default for ScenarioIv {
    fn default() -> Self {
        Self {
            delay: 10,
            window: 40,
            horizon: 5000,
            runs: 200,
            v_list: vec![5.0, 50.0],
            radius: 0.05,
            rho: 0.995,
        }
    }
}

/// Per-sensor marginal with mass 0.7 on `peak` and 0.1 elsewhere.
fn peaked_marginal(peak: usize) -> Distribution {
    let mut pmf = vec![0.1; 4];
    pmf[peak] = 0.7;
    Distribution::new(pmf).expect("hard-coded marginal is a valid pmf")
}

impl ScenarioIv {
    /// Builds the 3-user problem: 64 joint states, 8 joint actions, `K = 3`
    /// power constraints at 1/3 each. `p_0` is declared on `[−1, 0]` (the
    /// capped utility range), the powers on `[0, 1]`.
    pub fn problem(&self) -> ProblemSpec {
        let states = 64;
        let actions = 8;
        let mut tables = vec![vec![0.0; actions * states]; 4];
        for a in 0..actions {
            let alpha = [a & 1, (a >> 1) & 1, (a >> 2) & 1];
            for w in 0..states {
                let omega = [w & 3, (w >> 2) & 3, (w >> 4) & 3];
                let idx = a * states + w;
                let utility = ((alpha[0] * omega[0]) as f64 / 10.0
                    + ((alpha[1] * omega[1] + alpha[2] * omega[2]) as f64) / 20.0)
                    .min(1.0);
                tables[0][idx] = -utility;
                for i in 0..3 {
                    tables[1 + i][idx] = alpha[i] as f64;
                }
            }
        }
        ProblemSpec {
            num_users: 3,
            state_cards: vec![4, 4, 4],
            action_cards: vec![2, 2, 2],
            penalty_count: 3,
            cost_tables: tables,
            constraints: vec![1.0 / 3.0; 3],
            bounds: vec![(-1.0, 0.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0)],
        }
    }

    /// The limiting joint distribution: i.i.d. sensors, each `(0.1, 0.7, 0.1, 0.1)`.
    pub fn limit(&self) -> Distribution {
        let base = peaked_marginal(1);
        Distribution::product(&[base.clone(), base.clone(), base])
            .expect("product of valid marginals")
    }

    /// Default eight-member cover: member 0 is the limit; members 1..=7 move
    /// every sensor's peak to state 0 or state 2 (all combinations except
    /// all-peaks-at-2).
    pub fn cover(&self) -> Result<CoveringSet> {
        let mut members = vec![self.limit()];
        for j in 1u32..8 {
            let bits = j - 1;
            let marginals: Vec<Distribution> = (0..3)
                .map(|sensor| {
                    if bits >> (2 - sensor) & 1 == 1 {
                        peaked_marginal(2)
                    } else {
                        peaked_marginal(0)
                    }
                })
                .collect();
            members.push(Distribution::product(&marginals)?);
        }
        CoveringSet::new(members, self.radius)
    }

    /// Default transient schedule: `π_t = (1 − ρ^t)·π + ρ^t·P_{(t mod 8)}`,
    /// cycling through the covering members while decaying onto the limit.
    pub fn schedule(&self) -> Result<DistributionSchedule> {
        let cover = self.cover()?;
        DistributionSchedule::new(
            self.limit(),
            TransientRule::GeometricBlend {
                anchors: cover.members().to_vec(),
                rho: self.rho,
            },
            self.horizon,
        )
    }

    /// Stationary schedule pinned at covering member `j` — the setting of the
    /// detection-error experiments, where every window is drawn from the
    /// member the detector is supposed to find.
    pub fn stationary_at(&self, j: usize, horizon: usize) -> Result<DistributionSchedule> {
        let cover = self.cover()?;
        DistributionSchedule::new(
            cover.members()[j].clone(),
            TransientRule::Stationary,
            horizon,
        )
    }

    /// Engine knobs for one run at weight `v`.
    pub fn engine(&self, v: f64, seed: u64) -> EngineConfig {
        EngineConfig {
            v,
            delay: self.delay,
            window: self.window,
            horizon: self.horizon,
            seed,
            verify_common_information: false,
        }
    }
}
