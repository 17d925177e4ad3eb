//! Runs a bundled experiment config end to end and prints the summary.
//!
//! `cargo run --example run_config -- crates/core/examples/linear_recovery.toml`

use std::path::Path;

use nlframe::cli::{emit_report, execute, ExperimentConfig, ReportFormat};

fn main() -> nlframe::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/e2_beta.toml").to_string());
    let config = ExperimentConfig::load(&path)?;
    let base = Path::new(&path).parent().unwrap_or(Path::new("."));
    let exec = execute(&config, base)?;
    print!("{}", emit_report(&exec.report, ReportFormat::Md)?);
    Ok(())
}
