use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{Algorithm, DataSection, ExperimentConfig, Task};
use super::emit::{emit_report, ReportFormat};
use crate::certify::{certify_map, CertificationSuite, SamplingPlan};
use crate::error::{Error, Result};
use crate::maps::{BuiltMap, DifferentiableMap};
use crate::report::{Quantity, Verdict};
use crate::rng::{gaussian_vector, stream};
use crate::solvers::{
    left_inverse_iteration, localized_iteration, van_cittert_iteration, IterationConstants, SolverReport,
};
use crate::spaces::{read_vector, DenseOperator};
use crate::sparse::{a_a, recover, s_a, verify_axioms, AaReport, RecoveryReport, TripleSpec};

pub const TOOL: &str = "nlframe";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub algorithm: Algorithm,
    /// Constants the preconditions were checked with.
    pub constants: IterationConstants,
    pub report: SolverReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverOutcome {
    pub triple: TripleSpec,
    pub report: RecoveryReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleOutcome {
    pub triple: TripleSpec,
    pub s_a: Quantity,
    pub a_a: AaReport,
    pub verdicts: Vec<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunResult {
    Certify(CertificationSuite),
    Solve(SolveOutcome),
    Recover(RecoverOutcome),
    Triple(TripleOutcome),
}

impl RunResult {
    /// Every verdict in the result.
    pub fn verdicts(&self) -> Vec<&Verdict> {
        match self {
            RunResult::Certify(s) => s.verdicts.iter().collect(),
            RunResult::Solve(s) => s.report.verdicts.iter().collect(),
            RunResult::Recover(r) => r.report.constants.iter().flat_map(|c| c.verdicts.iter()).collect(),
            RunResult::Triple(t) => t.verdicts.iter().collect(),
        }
    }
}

/// Report content. Holds no timestamps, so equal inputs give equal bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub task: Task,
    pub seed: u64,
    pub config_hash: String,
    pub result: RunResult,
}

impl RunReport {
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.task.to_string())
    }

    pub fn solver(&self) -> Option<&SolverReport> {
        match &self.result {
            RunResult::Solve(s) => Some(&s.report),
            _ => None,
        }
    }

    pub fn certification(&self) -> Option<&CertificationSuite> {
        match &self.result {
            RunResult::Certify(s) => Some(s),
            _ => None,
        }
    }

    pub fn recovery(&self) -> Option<&RecoveryReport> {
        match &self.result {
            RunResult::Recover(r) => Some(&r.report),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// `report`, `trace`, `summary`.
    pub kind: String,
    pub path: PathBuf,
    pub sha256: String,
}

/// Provenance of one run; kept apart from the report because of timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
    pub artifacts: Vec<Artifact>,
}

/// A finished run before anything is written.
#[derive(Debug, Clone)]
pub struct Execution {
    pub report: RunReport,
    pub seeds: BTreeMap<String, u64>,
    pub timings: BTreeMap<String, f64>,
}

struct Stopwatch(BTreeMap<String, f64>);

impl Stopwatch {
    fn time<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.in_stage(stage));
        self.0.insert(stage.to_string(), start.elapsed().as_secs_f64());
        out
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() { p.to_path_buf() } else { base.join(p) }
}

fn build_map(config: &ExperimentConfig, seed: u64, base_dir: &Path) -> Result<(BuiltMap, DenseOperator)> {
    let mut spec = config.map.clone().ok_or_else(|| Error::invalid("config has no map"))?;
    if let Some(op) = &config.operator {
        spec.reference = Some(op.clone());
    }
    let built = spec.build(seed, base_dir)?;
    let t = built
        .operator
        .clone()
        .ok_or_else(|| Error::invalid(format!("{} has no reference operator; set `operator`", built.map.name())))?;
    Ok((built, t))
}

/// Measurements and the optional ground truth.
fn load_data(
    data: &DataSection,
    f: &dyn DifferentiableMap,
    seed: u64,
    base_dir: &Path,
) -> Result<(DVector<f64>, Option<DVector<f64>>)> {
    let truth = match (&data.truth, &data.truth_file) {
        (Some(v), _) => Some(DVector::from_column_slice(v)),
        (None, Some(p)) => Some(read_vector(resolve(base_dir, p))?),
        (None, None) => None,
    };
    if let Some(x) = &truth {
        if x.len() != f.in_dim() {
            return Err(Error::invalid(format!("truth has dimension {}, map input is {}", x.len(), f.in_dim())));
        }
    }
    let z = match (&data.file, &truth) {
        (Some(p), _) => read_vector(resolve(base_dir, p))?,
        (None, Some(x)) => {
            let mut z = f.eval(x);
            if let Some(noise) = &data.noise {
                noise.norm.check_dim(z.len())?;
                if noise.magnitude > 0.0 {
                    let mut rng = stream(noise.seed.unwrap_or(seed), 0x6e6f_6973);
                    let dir = gaussian_vector(&mut rng, z.len());
                    z += &dir * (noise.magnitude / noise.norm.norm(&dir));
                }
            }
            z
        }
        (None, None) => return Err(Error::invalid("data needs `file` or a truth to synthesize from")),
    };
    if z.len() != f.out_dim() {
        return Err(Error::invalid(format!("data has dimension {}, map output is {}", z.len(), f.out_dim())));
    }
    Ok((z, truth))
}

/// Validates the config and runs its pipeline without writing anything.
pub fn execute(config: &ExperimentConfig, base_dir: &Path) -> Result<Execution> {
    config.validate(base_dir)?;
    let task = config.task.expect("validated");
    let seed = config.effective_seed();
    let plan = config.effective_plan().unwrap_or_default();
    let mut seeds = BTreeMap::new();
    seeds.insert("config".to_string(), seed);
    seeds.insert("plan".to_string(), plan.seed);
    if let Some(m) = &config.map {
        seeds.insert("map".to_string(), m.seed.unwrap_or(seed));
    }
    if let Some(n) = config.data.as_ref().and_then(|d| d.noise.as_ref()) {
        seeds.insert("noise".to_string(), n.seed.unwrap_or(seed));
    }
    let mut clock = Stopwatch(BTreeMap::new());

    let result = match task {
        Task::Certify => {
            let (built, t) = clock.time("map", || build_map(config, seed, base_dir))?;
            let suite = clock.time("certify", || certify_map(built.map.as_ref(), &t, &plan))?;
            RunResult::Certify(suite)
        }
        Task::Solve => {
            let (built, t) = clock.time("map", || build_map(config, seed, base_dir))?;
            let f = built.map.as_ref();
            let section = config.solver.clone().expect("validated");
            let (z, truth) = clock.time("data", || load_data(config.data.as_ref().expect("validated"), f, seed, base_dir))?;
            let mut cfg = section.config;
            cfg.plan = plan.clone();
            if cfg.truth.is_none() {
                cfg.truth = truth.map(|x| x.iter().copied().collect());
            }
            let constants = match cfg.constants.clone() {
                Some(c) => c,
                None => clock.time("certify", || IterationConstants::sample(f, &t, &plan))?,
            };
            cfg.constants = Some(constants.clone());
            let report = clock.time("solve", || match section.algo {
                Algorithm::LeftInverse => left_inverse_iteration(f, &t, &t.left_inverse()?, &z, &cfg),
                Algorithm::VanCittert => van_cittert_iteration(f, &t, &z, &cfg),
                Algorithm::Localized => localized_iteration(f, &t, &z, &cfg),
            })?;
            RunResult::Solve(SolveOutcome { algorithm: section.algo, constants, report })
        }
        Task::Recover => {
            let (built, t) = clock.time("map", || build_map(config, seed, base_dir))?;
            let f = built.map.as_ref();
            let spec = config.triple.clone().expect("validated");
            let triple = spec.build()?;
            let section = config.recovery.clone().expect("validated");
            let (z, truth) = clock.time("data", || load_data(config.data.as_ref().expect("validated"), f, seed, base_dir))?;
            let mut opts = section.options;
            opts.plan = plan.clone();
            if opts.truth.is_none() {
                opts.truth = truth.map(|x| x.iter().copied().collect());
            }
            let report = clock.time("recover", || recover(f, &z, section.eps, &triple, Some(&t), &opts))?;
            RunResult::Recover(RecoverOutcome { triple: spec, report })
        }
        Task::Triple => {
            let spec = config.triple.clone().expect("validated");
            let out = clock.time("triple", || triple_outcome(&spec, &plan))?;
            RunResult::Triple(out)
        }
    };
    let report = RunReport {
        tool: TOOL.into(),
        version: VERSION.into(),
        name: config.name.clone(),
        task,
        seed,
        config_hash: config.hash()?,
        result,
    };
    Ok(Execution { report, seeds, timings: clock.0 })
}

/// Axiom verdicts and constants of a triple.
pub fn triple_outcome(spec: &TripleSpec, plan: &SamplingPlan) -> Result<TripleOutcome> {
    let triple = spec.build()?;
    Ok(TripleOutcome {
        triple: spec.clone(),
        s_a: s_a(&triple, plan)?,
        a_a: a_a(&triple, plan)?,
        verdicts: verify_axioms(&triple, plan)?,
    })
}

/// Output file names; `None` skips an artifact.
#[derive(Debug, Clone, Default)]
pub struct OutputPaths {
    pub report: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

fn write_artifact(kind: &str, path: &Path, text: &str) -> Result<Artifact> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("cannot write {}: {e}", path.display()))))?;
    Ok(Artifact {
        kind: kind.into(),
        path: path.to_path_buf(),
        sha256: hex::encode(Sha256::digest(text.as_bytes())),
    })
}

/// Writes the requested artifacts. The trace is only written for solver runs.
pub fn write_outputs(report: &RunReport, paths: &OutputPaths) -> Result<Vec<Artifact>> {
    let mut out = Vec::new();
    if let Some(p) = &paths.report {
        out.push(write_artifact("report", p, &emit_report(report, ReportFormat::Json)?)?);
    }
    if let (Some(p), Some(_)) = (&paths.trace, report.solver()) {
        out.push(write_artifact("trace", p, &emit_report(report, ReportFormat::Csv)?)?);
    }
    if let Some(p) = &paths.summary {
        out.push(write_artifact("summary", p, &emit_report(report, ReportFormat::Md)?)?);
    }
    Ok(out)
}

/// Validates, runs, and writes report, trace, summary and manifest into the
/// output directory (default `nlframe-out/<name>` under `base_dir`).
pub fn run_experiment(config: &ExperimentConfig, base_dir: &Path) -> Result<RunManifest> {
    let exec = execute(config, base_dir)?;
    let output = config.output.clone().unwrap_or_default();
    let dir = match &output.dir {
        Some(d) => resolve(base_dir, d),
        None => base_dir.join("nlframe-out").join(exec.report.label()),
    };
    let paths = OutputPaths {
        report: Some(dir.join(&output.report)),
        trace: Some(dir.join(&output.trace)),
        summary: Some(dir.join(&output.summary)),
    };
    let artifacts = write_outputs(&exec.report, &paths)?;
    let manifest = RunManifest {
        tool: TOOL.into(),
        tool_version: VERSION.into(),
        config_hash: exec.report.config_hash.clone(),
        seeds: exec.seeds,
        timings: exec.timings,
        artifacts,
    };
    write_artifact("manifest", &dir.join(&output.manifest), &serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}
