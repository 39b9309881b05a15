//! Experiment orchestration: configuration, runs, archives and sweeps.

pub mod archive;
pub mod config;
pub mod runs;
pub mod sweep;

pub use archive::{read_summary, write_run, RunSummary};
pub use config::{ExperimentConfig, Mode, ResolvedConfig};
pub use runs::{replay_standalone, run, run_discrete, run_optimize, run_quench, RunOutcome};
pub use sweep::{run_scaling_sweep, run_threshold_sweep, KRule, ScalingRow, ThresholdRow};
