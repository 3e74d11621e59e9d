//! Scenario files, the closed-loop experiment and its outputs.

mod config;
mod output;
mod run;

pub use config::{
    load_scenario, resolve_seed, ControllerConfig, EstimatorConfig, ProcessConfig, ReconfigConfig, ScenarioConfig,
    SensorConfig, TeamConfig, SEED_ENV,
};
pub use output::{emit_csv, events_csv, graphs_jsonl, metrics_csv, metrics_header, EVENT_COLUMNS, ROBOT_COLUMNS};
pub use run::{
    run_experiment, run_experiment_with, FailureRecord, IterationRecord, MetricsLog, Phase, RunOptions, RunStatus,
};
