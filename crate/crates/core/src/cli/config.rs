use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::certify::SamplingPlan;
use crate::error::{Error, Result};
use crate::maps::{catalog, MapSpec, OperatorSource};
use crate::solvers::SolverConfig;
use crate::sparse::{RecoveryOptions, TripleSpec};
use crate::spaces::NormSpec;

/// Environment variable that replaces the config's top-level seed.
pub const SEED_ENV: &str = "NLFRAME_SEED";

/// What an experiment does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Estimate the constants of a map against its reference operator.
    Certify,
    /// Reconstruct from data with one of the iterations.
    Solve,
    /// Minimum M-norm recovery on a sparse triple.
    Recover,
    /// Check the axioms and constants of a sparse triple.
    Triple,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Certify => "certify",
            Task::Solve => "solve",
            Task::Recover => "recover",
            Task::Triple => "triple",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[serde(alias = "left-inverse")]
    LeftInverse,
    #[serde(alias = "van-cittert")]
    VanCittert,
    Localized,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "left_inverse" => Ok(Self::LeftInverse),
            "van_cittert" => Ok(Self::VanCittert),
            "localized" => Ok(Self::Localized),
            _ => Err(Error::Parse(format!("unknown algorithm `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSection {
    pub algo: Algorithm,
    #[serde(flatten)]
    pub config: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverySection {
    pub eps: f64,
    #[serde(flatten)]
    pub options: RecoveryOptions,
}

/// Additive noise with a prescribed norm along a seeded Gaussian direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    #[serde(default = "NormSpec::l2")]
    pub norm: NormSpec,
    pub magnitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Measurements: read from a file, or synthesized as `F(truth) + noise`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
}

/// Where artifacts go. File names are relative to `dir`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub report: String,
    pub trace: String,
    pub summary: String,
    pub manifest: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: None,
            report: "report.json".into(),
            trace: "trace.csv".into(),
            summary: "summary.md".into(),
            manifest: "manifest.json".into(),
        }
    }
}

/// A complete experiment description. TOML for people, JSON for tools.
///
/// The top-level `plan` applies to every stage; a plan inside `solver` or
/// `recovery` is only used when the top-level one is absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSpec>,
    /// Replaces the map's natural reference operator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<SamplingPlan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recovery: Option<RecoverySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triple: Option<TripleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

/// One problem found by validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldIssue {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}`: {}", self.field, self.message)
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() { p.to_path_buf() } else { base.join(p) }
}

impl ExperimentConfig {
    /// Parses TOML or JSON; JSON is detected by a leading `{`.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
        } else {
            toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Replaces the top-level seed with `NLFRAME_SEED` when it is set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            let seed = v
                .trim()
                .parse::<u64>()
                .map_err(|_| Error::invalid(format!("{SEED_ENV} must be an unsigned integer, got `{v}`")))?;
            self.seed = Some(seed);
        }
        Ok(())
    }

    /// Every missing or invalid field. Relative paths resolve against `base_dir`.
    pub fn issues(&self, base_dir: &Path) -> Vec<FieldIssue> {
        let mut out = Vec::new();
        let mut push = |field: &str, message: String| out.push(FieldIssue { field: field.into(), message });
        let task = match self.task {
            Some(t) => Some(t),
            None => {
                push("task", "missing; one of certify, solve, recover, triple".into());
                None
            }
        };
        let needs_map = task != Some(Task::Triple);
        if needs_map && self.map.is_none() {
            push("map", "missing; a map spec is required unless task = \"triple\"".into());
        }
        match task {
            Some(Task::Solve) => {
                if self.solver.is_none() {
                    push("solver", "missing; needs at least `algo`".into());
                }
                if self.data.is_none() {
                    push("data", "missing; give `file` or `truth`".into());
                }
            }
            Some(Task::Recover) => {
                if self.triple.is_none() {
                    push("triple", "missing; e.g. \"classical:n=12,s=2\"".into());
                }
                if self.recovery.is_none() {
                    push("recovery", "missing; needs at least `eps`".into());
                }
                if self.data.is_none() {
                    push("data", "missing; give `file` or `truth`".into());
                }
            }
            Some(Task::Triple) => {
                if self.triple.is_none() {
                    push("triple", "missing; e.g. \"classical:n=12,s=2\"".into());
                }
            }
            _ => {}
        }

        if let Some(p) = self.effective_plan() {
            if let Err(e) = p.validate() {
                push("plan", e.to_string());
            }
        }
        if let Some(s) = &self.solver {
            if let Err(e) = s.config.validate() {
                push("solver", e.to_string());
            }
        }
        if let Some(r) = &self.recovery {
            if !(r.eps >= 0.0 && r.eps.is_finite()) {
                push("recovery.eps", format!("must be finite and nonnegative, got {}", r.eps));
            }
        }
        if let Some(t) = &self.triple {
            if let Err(e) = t.build() {
                push("triple", e.to_string());
            }
        }

        let mut sources: Vec<&OperatorSource> = self.map.iter().flat_map(|m| m.sources()).collect();
        sources.extend(self.operator.iter());
        for src in &sources {
            for f in src.files() {
                if !resolve(base_dir, f).exists() {
                    push("operator", format!("file {} does not exist", resolve(base_dir, f).display()));
                }
            }
        }
        let map_seeded = self.map.as_ref().is_some_and(|m| m.seed.is_some());
        if self.seed.is_none() && !map_seeded && sources.iter().any(|s| s.needs_seed()) {
            push("seed", "missing; a random operator without its own seed needs one".into());
        }
        if let Some(d) = &self.data {
            if d.file.is_none() && d.truth.is_none() && d.truth_file.is_none() {
                push("data", "give `file`, `truth` or `truth_file`".into());
            }
            if d.truth.is_some() && d.truth_file.is_some() {
                push("data.truth", "`truth` and `truth_file` are exclusive".into());
            }
            for (name, f) in [("data.file", &d.file), ("data.truth_file", &d.truth_file)] {
                if let Some(f) = f {
                    if !resolve(base_dir, f).exists() {
                        push(name, format!("file {} does not exist", resolve(base_dir, f).display()));
                    }
                }
            }
            if let Some(n) = &d.noise {
                if !(n.magnitude >= 0.0 && n.magnitude.is_finite()) {
                    push("data.noise.magnitude", format!("must be finite and nonnegative, got {}", n.magnitude));
                }
                if n.seed.is_none() && self.seed.is_none() {
                    push("seed", "missing; noise without its own seed needs one".into());
                }
                if d.file.is_some() {
                    push("data.noise", "noise is only added to synthesized data, not to `file`".into());
                }
            }
        }
        out
    }

    /// Fails with every issue in one message.
    pub fn validate(&self, base_dir: &Path) -> Result<()> {
        let issues = self.issues(base_dir);
        if issues.is_empty() {
            return Ok(());
        }
        let list: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
        Err(Error::invalid(format!("config has {} problem(s): {}", list.len(), list.join("; "))))
    }

    /// The plan shared by all stages.
    pub fn effective_plan(&self) -> Option<SamplingPlan> {
        self.plan
            .clone()
            .or_else(|| self.solver.as_ref().map(|s| s.config.plan.clone()))
            .or_else(|| self.recovery.as_ref().map(|r| r.options.plan.clone()))
    }

    /// The seed used for unseeded randomness (0 when nothing is random).
    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Compact JSON with keys sorted at every level. Output paths are left
    /// out: they do not change what is computed.
    pub fn canonical_json(&self) -> Result<String> {
        let content = Self { output: None, ..self.clone() };
        // serde_json's default map is ordered, so a Value round-trip sorts keys
        let v = serde_json::to_value(&content)?;
        Ok(serde_json::to_string(&v)?)
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.canonical_json()?.as_bytes())))
    }
}

/// Reads a map argument: a catalog name, a TOML or JSON file, or inline JSON.
pub fn resolve_map(arg: &str, base_dir: &Path) -> Result<MapSpec> {
    let arg = arg.trim();
    if let Some(e) = catalog().into_iter().find(|e| e.name == arg) {
        return Ok(e.spec);
    }
    if arg.starts_with('{') {
        return serde_json::from_str(arg).map_err(|e| Error::Parse(format!("map spec: {e}")));
    }
    let path = resolve(base_dir, Path::new(arg));
    if path.exists() {
        let text = fs::read_to_string(&path)?;
        return if text.trim_start().starts_with('{') {
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
        };
    }
    let names: Vec<String> = catalog().into_iter().map(|e| e.name).collect();
    Err(Error::invalid(format!(
        "map `{arg}` is neither a file, inline JSON, nor a catalog entry ({})",
        names.join(", ")
    )))
}

/// Reads a sampling plan from a JSON or TOML file, or inline JSON.
pub fn resolve_plan(arg: &str, base_dir: &Path) -> Result<SamplingPlan> {
    let arg = arg.trim();
    let text = if arg.starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(resolve(base_dir, Path::new(arg)))
            .map_err(|e| Error::invalid(format!("cannot read plan {arg}: {e}")))?
    };
    let plan: SamplingPlan = if text.trim_start().starts_with('{') {
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("plan: {e}")))?
    } else {
        toml::from_str(&text).map_err(|e| Error::Parse(format!("plan: {e}")))?
    };
    plan.validate()?;
    Ok(plan)
}
