//! JSON run configuration: parsing, defaulting, all-at-once validation, and
//! materialization into the typed problem/schedule/cover/engine bundle.
//!
//! Validation never stops at the first problem — [`RunConfig::validate`]
//! returns every violation it can find, and [`load_config`] folds a non-empty
//! report into [`Error::ConfigViolations`] so a user fixes one round trip,
//! not ten.

use crate::analysis::BoundVariant;
use crate::engine::EngineConfig;
use crate::error::{Error, Result};
use crate::harness::scenario::{ScenarioIv, PAPER_SEC4};
use crate::problem::{
    validate_problem, CoveringSet, Distribution, DistributionSchedule, ProblemSpec, TransientRule,
};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

/// Config documents this crate reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}
fn default_v() -> f64 {
    50.0
}
fn default_delay() -> usize {
    10
}
fn default_window() -> usize {
    40
}
fn default_horizon() -> usize {
    5000
}
fn default_runs() -> usize {
    200
}
fn default_seed() -> u64 {
    1729
}
fn default_radius() -> f64 {
    0.05
}
fn default_rho() -> f64 {
    0.995
}
fn default_transient() -> String {
    "geometric-blend".into()
}
fn default_bound_variant() -> String {
    "printed".into()
}

/// A problem given inline or as a path to another JSON file (resolved
/// relative to the config's directory).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSource {
    Path(PathBuf),
    Inline(ProblemConfig),
}

/// JSON mirror of [`ProblemSpec`]; `penalty_count` is implied by
/// `constraints.len()`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub num_users: usize,
    pub state_cards: Vec<usize>,
    pub action_cards: Vec<usize>,
    pub constraints: Vec<f64>,
    /// One flat table per `k ∈ 0..=K`, row-major `action · |Ω| + state`.
    pub cost_tables: Vec<Vec<f64>>,
    /// Declared `(p_min, p_max)` per `k`.
    pub bounds: Vec<(f64, f64)>,
}

impl ProblemConfig {
    pub fn to_spec(&self) -> ProblemSpec {
        ProblemSpec {
            num_users: self.num_users,
            state_cards: self.state_cards.clone(),
            action_cards: self.action_cards.clone(),
            penalty_count: self.constraints.len(),
            cost_tables: self.cost_tables.clone(),
            constraints: self.constraints.clone(),
            bounds: self.bounds.clone(),
        }
    }
}

/// Covering-set override: explicit member pmfs plus the radius `δ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverConfig {
    pub members: Vec<Vec<f64>>,
    #[serde(default = "default_radius")]
    pub radius: f64,
}

/// Schedule override. `transient` is `"geometric-blend"` (anchors cycle
/// through the covering members, decaying at `rho`) or `"stationary"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    /// Limit pmf; defaults to the scenario limit (preset) or covering
    /// member 0 (custom problems).
    #[serde(default)]
    pub limit: Option<Vec<f64>>,
    #[serde(default = "default_transient")]
    pub transient: String,
    #[serde(default = "default_rho")]
    pub rho: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            limit: None,
            transient: default_transient(),
            rho: default_rho(),
        }
    }
}

/// One experiment, as written down in JSON. Every field beyond
/// `schema_version` has a default, so the minimal useful document is
/// `{"schema_version": 1, "scenario": "paper-sec4"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    /// Built-in scenario name; mutually exclusive with `problem`.
    #[serde(default)]
    pub scenario: Option<String>,
    #[serde(default)]
    pub problem: Option<ProblemSource>,
    #[serde(default)]
    pub cover: Option<CoverConfig>,
    #[serde(default)]
    pub schedule: Option<ScheduleConfig>,
    /// Drift-penalty weight for single-V commands.
    #[serde(default = "default_v")]
    pub v: f64,
    /// Weights swept by `reproduce-paper`; defaults to `[5, 50]`.
    #[serde(default)]
    pub v_list: Option<Vec<f64>>,
    #[serde(default = "default_delay")]
    pub delay: usize,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Master seed; per-run seeds are derived, never reused.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Stationarity tolerance `ν ≥ 0` in the approximation gap.
    #[serde(default)]
    pub nu: f64,
    /// `"printed"` or `"hoeffding"`.
    #[serde(default = "default_bound_variant")]
    pub bound_variant: String,
    /// Output directory; CLI `--out` takes precedence.
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Run per-user queue replicas and fail on divergence.
    #[serde(default)]
    pub verify_common_information: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario: Some(PAPER_SEC4.into()),
            problem: None,
            cover: None,
            schedule: None,
            v: default_v(),
            v_list: None,
            delay: default_delay(),
            window: default_window(),
            horizon: default_horizon(),
            runs: default_runs(),
            seed: default_seed(),
            nu: 0.0,
            bound_variant: default_bound_variant(),
            out: None,
            verify_common_information: false,
        }
    }
}

/// A validated, fully constructed experiment ready to run.
#[derive(Debug, Clone)]
pub struct Instance {
    /// Scenario name or `"custom"`.
    pub label: String,
    pub spec: ProblemSpec,
    pub schedule: DistributionSchedule,
    pub cover: CoveringSet,
    /// Engine knobs with `seed` set to the *master* seed.
    pub engine: EngineConfig,
    pub runs: usize,
    pub v_list: Vec<f64>,
    pub nu: f64,
    pub variant: BoundVariant,
}

impl RunConfig {
    /// The bundled scenario with all defaults.
    pub fn paper_sec4() -> Self {
        Self::default()
    }

    fn parse_variant(&self) -> Option<BoundVariant> {
        match self.bound_variant.as_str() {
            "printed" => Some(BoundVariant::Printed),
            "hoeffding" => Some(BoundVariant::Hoeffding),
            _ => None,
        }
    }

    fn resolve_problem(&self, base_dir: &Path) -> Result<Option<ProblemConfig>> {
        match &self.problem {
            None => Ok(None),
            Some(ProblemSource::Inline(p)) => Ok(Some(p.clone())),
            Some(ProblemSource::Path(rel)) => {
                let path = base_dir.join(rel);
                let text = fs::read_to_string(&path)?;
                Ok(Some(serde_json::from_str(&text)?))
            }
        }
    }

    /// Collects every violation. Empty means the config is usable.
    pub fn validate(&self, base_dir: &Path) -> Vec<String> {
        let mut v = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            v.push(format!(
                "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if !(self.v >= 0.0 && self.v.is_finite()) {
            v.push(format!("V must be ≥ 0 and finite (got {})", self.v));
        }
        if let Some(list) = &self.v_list {
            if list.is_empty() {
                v.push("v_list must not be empty".into());
            }
            for &w in list {
                if !(w >= 0.0 && w.is_finite()) {
                    v.push(format!("v_list entry {w}: V must be ≥ 0 and finite"));
                }
            }
        }
        if self.runs == 0 {
            v.push("runs must be ≥ 1".into());
        }
        if self.window == 0 {
            v.push("window must be ≥ 1".into());
        }
        if self.horizon <= self.delay + self.window {
            v.push(format!(
                "horizon {} must exceed delay + window = {}",
                self.horizon,
                self.delay + self.window
            ));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            v.push(format!("nu must be ≥ 0 and finite (got {})", self.nu));
        }
        if self.parse_variant().is_none() {
            v.push(format!(
                "bound_variant must be \"printed\" or \"hoeffding\" (got {:?})",
                self.bound_variant
            ));
        }
        match (&self.scenario, &self.problem) {
            (None, None) => {
                v.push("either a scenario name or a problem is required".into());
            }
            (Some(_), Some(_)) => {
                v.push("scenario and problem are mutually exclusive".into());
            }
            (Some(name), None) if name != PAPER_SEC4 => {
                v.push(format!("unknown scenario {name:?} (known: {PAPER_SEC4:?})"));
            }
            _ => {}
        }
        match self.resolve_problem(base_dir) {
            Err(e) => v.push(format!("problem: {e}")),
            Ok(Some(p)) => {
                for msg in validate_problem(&p.to_spec()) {
                    v.push(format!("problem: {msg}"));
                }
                if self.cover.is_none() {
                    v.push("a problem needs an explicit cover".into());
                }
            }
            Ok(None) => {}
        }
        if let Some(cover) = &self.cover {
            if !(cover.radius > 0.0 && cover.radius.is_finite()) {
                v.push(format!(
                    "cover radius must be > 0 (got {})",
                    cover.radius
                ));
            }
            if cover.members.is_empty() {
                v.push("cover must have at least one member".into());
            }
            for (j, pmf) in cover.members.iter().enumerate() {
                if let Err(e) = Distribution::new(pmf.clone()) {
                    v.push(format!("cover member {j}: {e}"));
                }
            }
        }
        if let Some(schedule) = &self.schedule {
            if !matches!(schedule.transient.as_str(), "geometric-blend" | "stationary") {
                v.push(format!(
                    "schedule transient must be \"geometric-blend\" or \"stationary\" (got {:?})",
                    schedule.transient
                ));
            }
            if !(schedule.rho > 0.0 && schedule.rho < 1.0) {
                v.push(format!(
                    "schedule rho must lie in (0, 1) (got {})",
                    schedule.rho
                ));
            }
            if let Some(pmf) = &schedule.limit {
                if let Err(e) = Distribution::new(pmf.clone()) {
                    v.push(format!("schedule limit: {e}"));
                }
            }
        }
        v
    }

    /// Validates and builds the typed experiment bundle.
    pub fn instantiate(&self, base_dir: &Path) -> Result<Instance> {
        let violations = self.validate(base_dir);
        if !violations.is_empty() {
            return Err(Error::ConfigViolations(violations));
        }
        let preset = self.scenario.as_deref().map(|_| ScenarioIv {
            delay: self.delay,
            window: self.window,
            horizon: self.horizon,
            runs: self.runs,
            v_list: self.v_list.clone().unwrap_or_else(|| vec![5.0, 50.0]),
            radius: self.cover.as_ref().map_or(default_radius(), |c| c.radius),
            rho: self.schedule.as_ref().map_or(default_rho(), |s| s.rho),
        });

        let spec = match (&preset, self.resolve_problem(base_dir)?) {
            (_, Some(p)) => p.to_spec(),
            (Some(sc), None) => sc.problem(),
            (None, None) => unreachable!("validate requires a scenario or a problem"),
        };

        let cover = match (&self.cover, &preset) {
            (Some(c), _) => {
                let members = c
                    .members
                    .iter()
                    .map(|pmf| Distribution::new(pmf.clone()))
                    .collect::<Result<Vec<_>>>()?;
                CoveringSet::new(members, c.radius)?
            }
            (None, Some(sc)) => sc.cover()?,
            (None, None) => unreachable!("validate requires a cover for custom problems"),
        };

        let sched_cfg = self.schedule.clone().unwrap_or_default();
        let limit = match (&sched_cfg.limit, &preset) {
            (Some(pmf), _) => Distribution::new(pmf.clone())?,
            (None, Some(sc)) => sc.limit(),
            (None, None) => cover.members()[0].clone(),
        };
        let rule = match sched_cfg.transient.as_str() {
            "stationary" => TransientRule::Stationary,
            _ => TransientRule::GeometricBlend {
                anchors: cover.members().to_vec(),
                rho: sched_cfg.rho,
            },
        };
        let schedule = DistributionSchedule::new(limit, rule, self.horizon)?;
        if !cover.covers(schedule.limit())? {
            return Err(Error::ConfigViolations(vec![format!(
                "no covering member lies within radius {} of the schedule limit",
                cover.radius()
            )]));
        }

        Ok(Instance {
            label: self.scenario.clone().unwrap_or_else(|| "custom".into()),
            spec,
            schedule,
            cover,
            engine: EngineConfig {
                v: self.v,
                delay: self.delay,
                window: self.window,
                horizon: self.horizon,
                seed: self.seed,
                verify_common_information: self.verify_common_information,
            },
            runs: self.runs,
            v_list: self.v_list.clone().unwrap_or_else(|| vec![5.0, 50.0]),
            nu: self.nu,
            variant: self.parse_variant().expect("validated above"),
        })
    }
}

/// Reads, parses, and fully validates a config document.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    let config: RunConfig = serde_json::from_str(&text)?;
    let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
    let violations = config.validate(base_dir);
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(Error::ConfigViolations(violations))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn parse(json: &str) -> RunConfig {
        serde_json::from_str(json).expect("config parses")
    }

    #[test]
    fn minimal_document_expands_to_the_preset() {
        let config = parse(r#"{"schema_version": 1, "scenario": "paper-sec4"}"#);
        assert!(config.validate(Path::new(".")).is_empty());
        let inst = config.instantiate(Path::new(".")).unwrap();
        assert_eq!(inst.label, "paper-sec4");
        assert_eq!(inst.spec.num_users, 3);
        assert_eq!(inst.cover.len(), 8);
        assert_eq!(inst.engine.v, 50.0);
        assert_eq!(inst.engine.delay, 10);
        assert_eq!(inst.engine.window, 40);
        assert_eq!(inst.engine.horizon, 5000);
        assert_eq!(inst.runs, 200);
        assert_eq!(inst.v_list, vec![5.0, 50.0]);
        assert_eq!(inst.variant, BoundVariant::Printed);
    }

    #[test]
    fn every_violation_is_reported_at_once() {
        let config = parse(
            r#"{
                "schema_version": 3,
                "v": -1.0,
                "runs": 0,
                "bound_variant": "exact"
            }"#,
        );
        let report = config.validate(Path::new("."));
        assert!(report.iter().any(|m| m.contains("V must be ≥ 0")), "{report:?}");
        assert!(report.iter().any(|m| m.contains("schema_version")));
        assert!(report.iter().any(|m| m.contains("runs must be ≥ 1")));
        assert!(report.iter().any(|m| m.contains("bound_variant")));
        assert!(report.iter().any(|m| m.contains("scenario name or a problem")));
        assert_eq!(report.len(), 5, "{report:?}");
    }

    #[test]
    fn unknown_scenario_and_bad_shape_are_violations() {
        let config = parse(r#"{"scenario": "paper-sec5"}"#);
        let report = config.validate(Path::new("."));
        assert_eq!(report.len(), 1);
        assert!(report[0].contains("unknown scenario"));

        let config = parse(r#"{"scenario": "paper-sec4", "horizon": 50}"#);
        let report = config.validate(Path::new("."));
        assert_eq!(report.len(), 1);
        assert!(report[0].contains("horizon"));
    }

    fn tiny_problem_json() -> &'static str {
        // One user, two states, two actions, one constraint at 0.4.
        r#"{
            "num_users": 1,
            "state_cards": [2],
            "action_cards": [2],
            "constraints": [0.4],
            "cost_tables": [[0.0, 0.0, -0.2, -1.0], [0.0, 0.0, 1.0, 1.0]],
            "bounds": [[-1.0, 0.0], [0.0, 1.0]]
        }"#
    }

    #[test]
    fn inline_problem_with_cover_instantiates() {
        let json = format!(
            r#"{{
                "scenario": null,
                "problem": {},
                "cover": {{"members": [[0.5, 0.5], [0.9, 0.1]], "radius": 0.2}},
                "schedule": {{"transient": "stationary", "limit": [0.5, 0.5]}},
                "delay": 1, "window": 4, "horizon": 64, "runs": 3
            }}"#,
            tiny_problem_json()
        );
        let config = parse(&json);
        let report = config.validate(Path::new("."));
        assert!(report.is_empty(), "{report:?}");
        let inst = config.instantiate(Path::new(".")).unwrap();
        assert_eq!(inst.label, "custom");
        assert_eq!(inst.spec.penalty_count, 1);
        assert_eq!(inst.cover.len(), 2);
        assert_eq!(inst.schedule.pmf_at(3).unwrap().pmf(), &[0.5, 0.5]);
    }

    #[test]
    fn custom_problem_without_cover_is_rejected() {
        let json = format!(r#"{{"problem": {}}}"#, tiny_problem_json());
        let report = parse(&json).validate(Path::new("."));
        assert!(report.iter().any(|m| m.contains("explicit cover")), "{report:?}");
    }

    #[test]
    fn problem_file_reference_resolves_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        let mut f = std::fs::File::create(dir.path().join("problem.json")).unwrap();
        f.write_all(tiny_problem_json().as_bytes()).unwrap();
        let config_path = dir.path().join("run.json");
        std::fs::write(
            &config_path,
            r#"{
                "problem": "problem.json",
                "cover": {"members": [[0.5, 0.5]], "radius": 0.2},
                "delay": 1, "window": 4, "horizon": 64
            }"#,
        )
        .unwrap();
        let config = load_config(&config_path).unwrap();
        let inst = config.instantiate(dir.path()).unwrap();
        assert_eq!(inst.spec.num_states(), 2);

        // A dangling reference is a collected violation, not a panic.
        std::fs::write(
            dir.path().join("dangling.json"),
            r#"{"problem": "missing.json", "cover": {"members": [[1.0]], "radius": 0.1}}"#,
        )
        .unwrap();
        let err = load_config(&dir.path().join("dangling.json")).unwrap_err();
        match err {
            Error::ConfigViolations(report) => {
                assert!(report.iter().any(|m| m.contains("problem:")), "{report:?}")
            }
            other => panic!("expected ConfigViolations, got {other}"),
        }
    }

    #[test]
    fn scenario_knobs_override_the_preset() {
        let config = parse(
            r#"{"scenario": "paper-sec4", "window": 10, "horizon": 400, "runs": 8, "seed": 7}"#,
        );
        let inst = config.instantiate(Path::new(".")).unwrap();
        assert_eq!(inst.engine.window, 10);
        assert_eq!(inst.engine.horizon, 400);
        assert_eq!(inst.engine.seed, 7);
        assert_eq!(inst.runs, 8);
    }

    #[test]
    fn config_round_trips_through_json() {
        let config = RunConfig::paper_sec4();
        let text = serde_json::to_string_pretty(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), serde_json::to_string(&config).unwrap());
    }

    /// The JSON Schema shipped in `docs/` must stay in lockstep with this
    /// module: same version number, and a field set that covers exactly the
    /// fields serde accepts (the struct is `deny_unknown_fields`).
    #[test]
    fn shipped_schema_matches_this_build() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/config.schema.json");
        let text = fs::read_to_string(&path).expect("docs/config.schema.json must exist");
        let schema: serde_json::Value = serde_json::from_str(&text).unwrap();

        assert_eq!(
            schema["properties"]["schema_version"]["enum"],
            serde_json::json!([SCHEMA_VERSION]),
            "schema version drifted from SCHEMA_VERSION"
        );

        let serialized = serde_json::to_value(RunConfig::paper_sec4()).unwrap();
        let mut declared: Vec<&str> =
            schema["properties"].as_object().unwrap().keys().map(String::as_str).collect();
        let mut accepted: Vec<&str> =
            serialized.as_object().unwrap().keys().map(String::as_str).collect();
        declared.sort_unstable();
        accepted.sort_unstable();
        assert_eq!(declared, accepted, "schema fields drifted from RunConfig");
    }
}
