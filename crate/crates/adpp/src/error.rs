//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("covering set is empty")]
    EmptyCover,
    #[error("slot {t} beyond schedule horizon {horizon}")]
    HorizonExceeded { t: usize, horizon: usize },
    #[error("strategy space too large: F = {f} exceeds cap {cap}")]
    StrategyCapExceeded { f: u128, cap: u64 },
    #[error("strategy count overflows u64")]
    StrategyCountOverflow,
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("simplex iteration cap exceeded after {0} pivots")]
    IterationCap(usize),
    #[error("oracle size cap exceeded: F = {f}, K = {k} (limits F <= 8, K <= 3)")]
    OracleCapExceeded { f: usize, k: usize },
    #[error("infeasible at x = 0; Lipschitz estimate presumes a feasible base problem")]
    InfeasibleAtOrigin,
    #[error("covering set inconsistent with data: every member assigns zero mass to some observed state")]
    DetectionInconsistent,
    #[error("insufficient runs: {got} < {min}")]
    InsufficientRuns { got: usize, min: usize },
    #[error("epsilon below mean gap: epsilon = {epsilon}, mean gap = {mean_gap}")]
    EpsilonBelowMeanGap { epsilon: f64, mean_gap: f64 },
    #[error("mixing too slow for requested confidence: gamma = {gamma} <= t * beta = {t_beta}")]
    MixingTooSlow { gamma: f64, t_beta: f64 },
    #[error("member {member} assigns zero probability to state {state} carrying mass under the schedule")]
    ZeroMassMember { member: usize, state: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("common-information replicas diverged at slot {t}: user {user}, queue {k}")]
    ReplicaDivergence { t: usize, user: usize, k: usize },
    #[error("configuration invalid:\n{}", .0.join("\n"))]
    ConfigViolations(Vec<String>),
    #[error("trace parse error at {path}:{line}: {msg}")]
    TraceParse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
