//! Cost model of a heterogeneous multi-core pipeline: cycle and gain
//! arithmetic, a per-core cycle simulator driven by a cost table, the
//! strengthen/prune optimizer, and plain-text scenario files.

pub mod cost;
pub mod metrics;
pub mod optimize;
pub mod report;
pub mod scenario;
pub mod simulate;

use thiserror::Error;

pub use cost::{CoreConfig, CostTable, Feature, FeatureCosts, FeatureSet};
pub use metrics::{gain_report, performance, running_time_us, system_cycles, GainReport, RunMetrics, DEFAULT_CLOCK_MHZ};
pub use optimize::{optimize, optimize_from, Objective, OptimizeResult};
pub use scenario::{Scenario, ScenarioError};
pub use simulate::{simulate, Simulation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PerfError {
    #[error("clock must be positive, got {0} MHz")]
    Clock(f64),
    #[error("running time must be positive, got {0} us")]
    RunningTime(f64),
    #[error("no cores")]
    NoCores,
    #[error("{partitions} partitions but {cores} cores")]
    Mismatch { partitions: usize, cores: usize },
    #[error("stream length must be at least 1")]
    EmptyStream,
    #[error("cores run at different clocks")]
    MixedClocks,
    #[error("baseline {0} must be positive")]
    Baseline(&'static str),
    #[error("{0} must be non-negative")]
    Negative(&'static str),
    #[error("unknown feature {0:?} (expected mul, icache8, dcache8)")]
    UnknownFeature(String),
    #[error("unknown objective {0:?} (expected min_area or min_power)")]
    UnknownObjective(String),
    #[error("cost table: {0}")]
    Cost(String),
    #[error("optimizer did not settle within {0} passes")]
    NoConvergence(usize),
    #[error("scenario: {0}")]
    Scenario(String),
}
