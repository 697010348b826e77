//! Experiment harness: build a trace, run policies against it, and report
//! utility and regret against the best static configuration in hindsight.

mod config;
mod report;
mod run;

pub use config::{
    ExperimentConfig, HindsightMethod, Mode, NetworkSource, PolicyKind, PolicySpec, StepKind,
    TraceSource,
};
pub use report::{
    bounds_table, inspect, summarize, write_bounds, write_inspect, write_results, BoundRow,
    BoundsQuery, InspectRow, PolicySummary, MONTE_CARLO_MAX_FILES, RESULTS_HEADER, VERSION,
};
pub use run::{build_trace, run_experiment, PolicyRun, PolicyState, RunOutput, RunState};
