//! Config-driven experiment runs, grid sweeps, bound reports and the
//! verification ledger.

pub mod config;
pub mod report;
pub mod run;
pub mod sweep;
pub mod verify;

pub use config::{Executor, Instance, MethodBlock, PoolBlock, ProblemBlock, RunConfig, Target, TargetMetric};
pub use report::{bounds_report, BoundsRow};
pub use run::{execute, output_dir, run_all, run_id, run_to_dir, summarize, trace_csv, RunResult, Summary, CSV_HEADER, OUT_ENV};
pub use sweep::{sweep, sweep_to_dir, SweepEntry, SweepReport};
pub use verify::{verify, CheckResult, CHECKS};
