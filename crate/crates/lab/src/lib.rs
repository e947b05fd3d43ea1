//! Experiment harness around `vqc-core`: configuration-driven sweeps of
//! first-layer gradient variance over qubit or layer counts, `dr_max`
//! selection, and CSV / SVG / JSON output.

pub mod config;
pub mod emit;
pub mod error;
pub mod select;
pub mod sweep;

pub use config::{ExperimentConfig, Overrides, StrategySpec};
pub use error::{LabError, Result};
pub use sweep::{run_sweep, SweepOutput, VarianceRecord};
