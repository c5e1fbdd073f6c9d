//! Experiment harness for the distributed community-detection pipeline.
//!
//! This crate turns flat key-value config files into seeded experiment
//! grids — pilot-fraction sweeps, signal-strength sweeps, unbalanced-worker
//! sweeps, and a comparison against full-graph spectral clustering — runs
//! them through [`dcd_core`], and writes plot-ready CSV tables. The `dcd`
//! binary is a thin shell over this library.

pub mod config;
pub mod runner;
pub mod stats;

pub use config::Config;
pub use runner::{
    build_file_spec, build_scenario, resolve_seed, run_file, run_grid, summarize, write_outputs,
    Algo, FileRunSpec, GridPoint, Partition, PilotCount, PointOutcome, RepOutcome, Scenario,
    ScenarioKind, ScenarioPlan,
};
