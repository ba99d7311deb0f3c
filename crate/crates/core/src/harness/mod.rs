//! Experiment orchestration: epsilon sweeps, log-log fits and persisted reports.

pub mod config;
pub mod fit;
pub mod report;
pub mod sweep;

pub use config::RunConfig;
pub use fit::{fit_powerlaw, PowerLawFit};
pub use report::{emit_report, read_record, SweepRecord};
pub use sweep::{run_sweep, GridPolicy, LifespanFit, SweepPlan, SweepRow};
