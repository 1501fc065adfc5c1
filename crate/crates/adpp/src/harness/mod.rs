//! Experiment plumbing: JSON run configuration, the built-in three-sensor
//! scenario, Monte Carlo orchestration, and CSV/manifest emission.
//!
//! Nothing in here adds algorithmic content — the goal is that a run is
//! described by one config document, executes reproducibly (identical config
//! and master seed give byte-identical output files), and leaves behind a
//! manifest saying exactly what was written.

pub mod cli;
pub mod config;
pub mod output;
pub mod reproduce;
pub mod runner;
pub mod scenario;

pub use cli::cli_dispatch;
pub use config::{load_config, Instance, RunConfig, SCHEMA_VERSION};
pub use output::{config_hash, Manifest};
pub use reproduce::reproduce_paper;
pub use runner::{derive_seed, run_ensemble, thread_cap};
pub use scenario::{ScenarioIv, PAPER_SEC4};
