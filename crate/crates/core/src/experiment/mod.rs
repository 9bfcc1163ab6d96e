//! Configuration-driven batch runs reproducing the estimation experiments:
//! a sweep over the number of measurements, a sweep over photon number, and
//! free-form scenarios.

pub mod config;
pub mod output;
pub mod plot;
pub mod runner;

pub use config::{ScenarioConfig, SweepAxis};
pub use output::write_outputs;
pub use runner::{run_custom, run_fig2, run_fig3, run_kind, RunKind, RunResult, SweepRow};
