//! The experiment grid: configuration, multi-seed runs, report files and
//! the `ordbench` command line.

pub mod cli;
pub mod config;
pub mod report;
pub mod run;
pub mod verify;

pub use config::{DataConfig, DataFormat, ExperimentConfig, HeadChoice, MethodEntry, MethodSpec, ModelChoice, ModelConfig, PRESETS};
pub use run::{aggregate, load_dataset, make_splits, run_benchmark, train_method, Aggregate, RunRecord, RunReport, Stat, Timing};
pub use report::{emit_report, ensure_writable, load_report, render_table};
pub use cli::cli_main;
