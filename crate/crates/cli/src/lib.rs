//! Command implementations behind the `isosense` binary.

pub mod commands;
pub mod error;
pub mod manifest;

pub use commands::{
    cmd_analyze, cmd_compare, cmd_eval, cmd_inventory, cmd_laser, cmd_synth, AnalyzeOptions, CompareOptions,
    EvalOptions,
};
pub use error::{CliError, ExitKind};
pub use manifest::{OutputDir, RunManifest, RUN_MANIFEST_FILE};
