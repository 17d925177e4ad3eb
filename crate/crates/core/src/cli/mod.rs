//! Experiment configs, the certify → gate → solve/recover pipeline, and
//! report emission (JSON, CSV traces, markdown summaries).
//!
//! The `nlframe` binary is a thin argument parser over this module.

mod config;
mod emit;
mod run;

pub use config::{
    resolve_map, resolve_plan, Algorithm, DataSection, ExperimentConfig, FieldIssue, NoiseModel, OutputSection,
    RecoverySection, SolverSection, Task, SEED_ENV,
};
pub use emit::{bound_rows, constant_rows, emit_report, BoundRow, ReportFormat, Row};
pub use run::{
    execute, run_experiment, triple_outcome, write_outputs, Artifact, Execution, OutputPaths, RecoverOutcome,
    RunManifest, RunReport, RunResult, SolveOutcome, TripleOutcome, TOOL, VERSION,
};

use std::path::Path;

use crate::error::{Error, Result};

/// Reads a report written by [`run_experiment`] or the subcommands.
pub fn load_report(path: impl AsRef<Path>) -> Result<RunReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read report {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests;
