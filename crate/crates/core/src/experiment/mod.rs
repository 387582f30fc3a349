//! Experiment orchestration: configs, multi-seed runs, sweeps, ablations
//! and result files.

pub mod config;
pub mod emit;
pub mod runner;

pub use config::{ExperimentConfig, OUTPUT_ROOT_ENV};
pub use emit::{emit_results, write_ablation, write_run, write_sweep, OutputFormat};
pub use runner::{
    run_ablation, run_ablation_on_graph, run_experiment, run_on_graph, run_seed, run_synthetic_sweep, AblationKind,
    AblationResult, Aggregate, MeanStd, RunResult, SeedMetrics, SeedResult, SweepPoint, SweepResult,
};
