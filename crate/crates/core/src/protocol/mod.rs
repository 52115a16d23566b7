//! Time-oracle protocols, complexity measures and monitors.

pub mod adapter;
pub mod engine;
pub mod ledger;
pub mod trace;

pub use adapter::ServerAlgorithm;
pub use engine::{
    run_classical_protocol, run_time_protocol, AlgorithmAction, ClassicalAlgorithm, ClassicalMinibatch, ClassicalSgd,
    OracleKind, ProtocolSetup, TimeAlgorithm, TimeWrapped,
};
pub use ledger::{earliest_completion_times, success_ledger, LevelRecord, SuccessLedger};
pub use trace::{
    check_zero_respecting, measure_time_to_epsilon, Criterion, EventKind, RecordOptions, StopReason, StopRule,
    Threshold, Trace, TraceEvent, TraceSource, ZeroViolation,
};
