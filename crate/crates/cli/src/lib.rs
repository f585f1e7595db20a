//! Batch front end: pipeline files, stage execution and report bundles.
//!
//! A run loads every input named by a [`PipelineSpec`], executes the listed
//! stages in order and returns a [`Bundle`] (a schema-versioned JSON report
//! plus CSV tables) that [`emit_report`] writes atomically to a directory.

mod inputs;
mod pipeline;
mod report;
mod spec;

use std::path::PathBuf;

use thiserror::Error;

pub use inputs::{validate_file, FileKind, OracleDoc, OracleGrid, OracleState};
pub use pipeline::run_pipeline;
pub use report::{emit_report, Bundle, CsvTable, Report, StageReport, StageStatus, REPORT_FILE, SCHEMA};
pub use spec::{
    CalibrationSettings, ClosureSettings, EntropyRequest, EntropySettings, Inputs, ModelInput,
    PipelineSpec, SimpleSettings, Stage, ThermalSettings, Tolerances, SCHEMA_VERSION,
};

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "ENTROPY_ENGINE_OUT";

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VIOLATIONS: i32 = 1;
    pub const INPUT_ERROR: i32 = 2;
}

/// Problems with the inputs themselves; these map to exit code 2.
#[derive(Debug, Error)]
pub enum InputError {
    #[error("{}: line {line}, column {column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("unknown stage `{0}`")]
    UnknownStage(String),
    #[error("stage `{stage}` requires `{requires}` earlier in the pipeline")]
    StageOrder { stage: Stage, requires: Stage },
    #[error("stage `{stage}` needs the `{input}` input")]
    MissingInput { stage: Stage, input: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("cannot write report: {0}")]
    Output(String),
}
