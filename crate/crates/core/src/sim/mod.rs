//! Trace-driven experiments: workload generation, window pipeline, metrics.

mod engine;
mod metrics;
mod workload;

pub use engine::{
    run_experiment, run_experiment_with_trace, ExperimentConfig, ModelSelector, SimState, Threshold,
};
pub use metrics::{
    fault_order_violations, fault_sanity_check, ExperimentReport, FaultOrderViolation,
    LatencyHistogram, Summary, TierInfo, WindowMetrics,
};
pub use workload::{
    generate_trace, generate_window, read_trace, split_windows, write_trace, AccessDistribution,
    Op, TraceRecord, WorkloadSpec,
};
