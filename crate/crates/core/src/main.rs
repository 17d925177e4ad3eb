use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nlframe::cli::{
    emit_report, execute, load_report, resolve_map, resolve_plan, run_experiment, write_outputs, Algorithm,
    DataSection, ExperimentConfig, OutputPaths, RecoverySection, ReportFormat, SolverSection, Task,
};
use nlframe::maps::OperatorSource;
use nlframe::solvers::SolverConfig;
use nlframe::sparse::{RecoveryMethod, RecoveryOptions, TripleSpec};
use nlframe::spaces::read_vector;
use nlframe::{Error, Result};

#[derive(Parser)]
#[command(name = "nlframe", version, about = "Certified reconstruction from nonlinear measurements")]
struct Cli {
    /// Cap on worker threads for sampling and enumeration.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Catalog name, TOML/JSON file, or inline JSON map spec.
    #[arg(long)]
    map: String,
    /// Reference operator file (CSV or JSON), replacing the map's own.
    #[arg(long)]
    operator: Option<PathBuf>,
    /// Sampling plan: JSON/TOML file or inline JSON.
    #[arg(long)]
    plan: Option<String>,
    /// Seed for unseeded randomness.
    #[arg(long, env = "NLFRAME_SEED")]
    seed: Option<u64>,
    /// Report JSON path; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Markdown summary path.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate map constants against the reference operator.
    Certify {
        #[command(flatten)]
        common: Common,
    },
    /// Reconstruct from data with an iterative scheme.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_algo)]
        algo: Algorithm,
        /// Measurement vector file.
        #[arg(long)]
        data: PathBuf,
        /// Ground truth vector file, used for error reporting only.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Run past failed preconditions; the report marks them unverified.
        #[arg(long)]
        force: bool,
        /// Trace CSV path.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Minimum M-norm recovery subject to a data-fit constraint.
    Recover {
        #[command(flatten)]
        common: Common,
        /// e.g. classical:n=12,s=2 or weighted:s=2,w=[1,2,3]
        #[arg(long)]
        triple: String,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value = "enum", value_parser = parse_method)]
        method: RecoveryMethod,
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Skip the composed constants and predicted bounds.
        #[arg(long)]
        no_constants: bool,
    },
    /// Sparse triple utilities.
    Triple {
        #[command(subcommand)]
        action: TripleAction,
    },
    /// Run an experiment config (TOML or JSON).
    Run {
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Re-emit a report in another format.
    Report {
        report: PathBuf,
        #[arg(long, default_value = "md", value_parser = parse_format)]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum TripleAction {
    /// Check the axioms and estimate s_A and a_A.
    Verify {
        #[arg(long)]
        triple: String,
        #[arg(long)]
        plan: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

fn parse_algo(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_method(s: &str) -> std::result::Result<RecoveryMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> std::result::Result<ReportFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn base_config(task: Task, c: &Common, cwd: &Path) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        task: Some(task),
        seed: c.seed,
        map: Some(resolve_map(&c.map, cwd)?),
        operator: c.operator.clone().map(|path| OperatorSource::File { path }),
        plan: c.plan.as_deref().map(|p| resolve_plan(p, cwd)).transpose()?,
        ..Default::default()
    })
}

fn truth_vec(p: &Option<PathBuf>) -> Result<Option<Vec<f64>>> {
    p.as_ref().map(|p| Ok(read_vector(p)?.iter().copied().collect())).transpose()
}

fn finish(config: &ExperimentConfig, cwd: &Path, out: Option<PathBuf>, trace: Option<PathBuf>, summary: Option<PathBuf>) -> Result<()> {
    let exec = execute(config, cwd)?;
    let to_stdout = out.is_none();
    let paths = OutputPaths { report: out, trace, summary };
    for a in write_outputs(&exec.report, &paths)? {
        eprintln!("wrote {} {}", a.kind, a.path.display());
    }
    if to_stdout {
        println!("{}", emit_report(&exec.report, ReportFormat::Json)?);
    }
    let failed: Vec<&str> = exec.report.result.verdicts().iter().filter(|v| !v.pass).map(|v| v.condition.as_str()).collect();
    if !failed.is_empty() {
        eprintln!("failed conditions: {}", failed.join(", "));
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("cannot size the thread pool: {e}")))?;
    }
    let cwd = PathBuf::from(".");
    match cli.command {
        Command::Certify { common } => {
            let config = base_config(Task::Certify, &common, &cwd)?;
            finish(&config, &cwd, common.out, None, common.summary)
        }
        Command::Solve { common, algo, data, truth, mu, max_iter, tol, force, trace } => {
            let mut solver = SolverConfig { mu, force, truth: truth_vec(&truth)?, ..SolverConfig::default() };
            if let Some(m) = max_iter {
                solver.max_iter = m;
            }
            if let Some(t) = tol {
                solver.tol = t;
            }
            let config = ExperimentConfig {
                solver: Some(SolverSection { algo, config: solver }),
                data: Some(DataSection { file: Some(data), ..Default::default() }),
                ..base_config(Task::Solve, &common, &cwd)?
            };
            finish(&config, &cwd, common.out, trace, common.summary)
        }
        Command::Recover { common, triple, data, eps, method, truth, no_constants } => {
            let options = RecoveryOptions { method, truth: truth_vec(&truth)?, constants: !no_constants, ..Default::default() };
            let config = ExperimentConfig {
                triple: Some(triple.parse::<TripleSpec>()?),
                recovery: Some(RecoverySection { eps, options }),
                data: Some(DataSection { file: Some(data), ..Default::default() }),
                ..base_config(Task::Recover, &common, &cwd)?
            };
            finish(&config, &cwd, common.out, None, common.summary)
        }
        Command::Triple { action: TripleAction::Verify { triple, plan, out, summary } } => {
            let config = ExperimentConfig {
                task: Some(Task::Triple),
                triple: Some(triple.parse::<TripleSpec>()?),
                plan: plan.as_deref().map(|p| resolve_plan(p, &cwd)).transpose()?,
                ..Default::default()
            };
            finish(&config, &cwd, out, None, summary)
        }
        Command::Run { config, out_dir } => {
            let mut c = ExperimentConfig::load(&config)?;
            c.apply_env()?;
            let mut o = c.output.clone().unwrap_or_default();
            // the command line and the default are relative to the caller, not to the config file
            if let Some(d) = out_dir {
                o.dir = Some(std::env::current_dir()?.join(d));
            } else if o.dir.is_none() {
                let stem = config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                o.dir = Some(std::env::current_dir()?.join("nlframe-out").join(c.name.clone().unwrap_or(stem)));
            }
            c.output = Some(o);
            let base = config.parent().map(Path::to_path_buf).unwrap_or_else(|| cwd.clone());
            let m = run_experiment(&c, &base)?;
            for a in &m.artifacts {
                eprintln!("wrote {} {}", a.kind, a.path.display());
            }
            println!("{}", serde_json::to_string_pretty(&m)?);
            Ok(())
        }
        Command::Report { report, format, out } => {
            let r = load_report(&report)?;
            let text = emit_report(&r, format)?;
            match out {
                Some(p) => std::fs::write(&p, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nlframe: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
