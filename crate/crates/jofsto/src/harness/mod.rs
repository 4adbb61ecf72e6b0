//! Experiment orchestration: configuration with CLI-over-file-over-default
//! precedence, the `simulate` / `train` / `evaluate` / `report` / `grid`
//! commands, and run-directory conventions.

mod commands;
mod config;

pub use commands::{
    cmd_evaluate, cmd_report, cmd_simulate, cmd_train, discover_subruns, grid_search,
    load_dataset_dir, GridSpec,
};
pub use config::{Ablation, ExperimentConfig, Method, SimulateSpec};
