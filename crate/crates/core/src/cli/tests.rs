use std::path::Path;

use super::*;
use crate::error::Error;

fn here() -> &'static Path {
    Path::new(".")
}

const SCALAR_SOLVE: &str = r#"
name = "scalar"
task = "solve"

[map]
kind = "perturbed_linear"
eta = 0.1
g = "sin"
operator = { source = "identity", n = 1 }

[plan]
box_radius = 4.0
n_pts = 64
n_dir = 4
refine_rounds = 2

[solver]
algo = "left_inverse"
mu = 0.9090909090909091

[data]
truth = [0.7]
"#;

#[test]
fn empty_config_lists_required_fields() {
    let c = ExperimentConfig::parse("").unwrap();
    let issues = c.issues(here());
    let fields: Vec<&str> = issues.iter().map(|i| i.field.as_str()).collect();
    assert_eq!(fields, ["task", "map"]);
    let err = c.validate(here()).unwrap_err();
    assert!(matches!(err, Error::InvalidInput(_)));
    assert_eq!(err.exit_code(), 2);
    let msg = err.to_string();
    assert!(msg.contains("`task`") && msg.contains("`map`"), "{msg}");
}

#[test]
fn task_specific_requirements() {
    let c = ExperimentConfig::parse("task = \"recover\"\n[map]\nkind = \"e_map\"\np = 2\n").unwrap();
    let fields: Vec<String> = c.issues(here()).into_iter().map(|i| i.field).collect();
    assert_eq!(fields, ["triple", "recovery", "data"]);
    let c = ExperimentConfig::parse("task = \"triple\"").unwrap();
    let fields: Vec<String> = c.issues(here()).into_iter().map(|i| i.field).collect();
    assert_eq!(fields, ["triple"]);
}

#[test]
fn unknown_fields_are_rejected() {
    assert!(ExperimentConfig::parse("task = \"certify\"\nbogus = 1\n").is_err());
}

#[test]
fn randomness_requires_a_seed() {
    let text = r#"
task = "certify"
[map]
kind = "linear"
operator = { source = "random", rows = 3, cols = 2 }
"#;
    let mut c = ExperimentConfig::parse(text).unwrap();
    let issues = c.issues(here());
    assert_eq!(issues.len(), 1);
    assert_eq!(issues[0].field, "seed");
    c.seed = Some(4);
    assert!(c.issues(here()).is_empty());
}

#[test]
fn missing_files_are_reported() {
    let text = r#"
task = "solve"
[map]
kind = "linear"
operator = { source = "file", path = "nowhere/T.csv" }
[solver]
algo = "van-cittert"
[data]
file = "nowhere/z.csv"
"#;
    let c = ExperimentConfig::parse(text).unwrap();
    let fields: Vec<String> = c.issues(here()).into_iter().map(|i| i.field).collect();
    assert_eq!(fields, ["operator", "data.file"]);
}

#[test]
fn hash_is_stable_under_reordering() {
    let a = ExperimentConfig::parse(SCALAR_SOLVE).unwrap();
    let reordered = r#"
[data]
truth = [0.7]

[solver]
mu = 0.9090909090909091
algo = "left_inverse"

[plan]
refine_rounds = 2
n_dir = 4
n_pts = 64
box_radius = 4.0

[map]
operator = { n = 1, source = "identity" }
g = "sin"
eta = 0.1
kind = "perturbed_linear"
"#;
    let mut b = ExperimentConfig::parse(reordered).unwrap();
    b.name = Some("scalar".into());
    b.task = Some(Task::Solve);
    assert_eq!(a.canonical_json().unwrap(), b.canonical_json().unwrap());
    assert_eq!(a.hash().unwrap(), b.hash().unwrap());
    assert_eq!(a.hash().unwrap().len(), 64);
    let json = a.canonical_json().unwrap();
    let c = ExperimentConfig::parse(&json).unwrap();
    assert_eq!(c.canonical_json().unwrap(), json);
    b.seed = Some(1);
    assert_ne!(a.hash().unwrap(), b.hash().unwrap());
}

#[test]
fn solve_pipeline_and_trace() {
    let c = ExperimentConfig::parse(SCALAR_SOLVE).unwrap();
    let exec = execute(&c, here()).unwrap();
    let r = exec.report.solver().unwrap();
    assert!(r.converged);
    // oracle: x + 0.1 sin x at the truth reproduces the data
    let x = r.final_point[0];
    assert!((x - 0.7).abs() < 1e-10);
    let csv = emit_report(&exec.report, ReportFormat::Csv).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "iter,residual,ratio,err_l2,err_linf");
    let iters: Vec<usize> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(!iters.is_empty());
    assert!(iters.windows(2).all(|w| w[1] > w[0]));
    assert!(exec.timings.contains_key("solve"));
}

#[test]
fn md_summary_lists_every_verdict() {
    let c = ExperimentConfig::parse(SCALAR_SOLVE).unwrap();
    let exec = execute(&c, here()).unwrap();
    let md = emit_report(&exec.report, ReportFormat::Md).unwrap();
    let verdicts = exec.report.result.verdicts();
    assert!(!verdicts.is_empty());
    for v in verdicts {
        let line = md.lines().find(|l| l.starts_with(&format!("| {} |", v.condition))).unwrap();
        assert!(line.contains(if v.pass { "| pass |" } else { "| FAIL |" }));
    }
    assert!(md.contains("## Bounds") || exec.report.solver().unwrap().error_bound.is_none());
}

#[test]
fn refusal_surfaces_with_stage_and_exit_code() {
    let text = r#"
task = "solve"
[map]
kind = "e_map"
p = 2
[plan]
box_radius = 12.0
n_pts = 400
n_dir = 1
refine_rounds = 4
[solver]
algo = "van_cittert"
mu = 0.1
[data]
truth = [0.3]
"#;
    let c = ExperimentConfig::parse(text).unwrap();
    let err = execute(&c, here()).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(matches!(err.root(), Error::CertificateFailed { .. }));
    assert!(err.to_string().starts_with("solve:"), "{err}");
}

#[test]
fn certify_report_round_trips() {
    let text = r#"
task = "certify"
[map]
kind = "e_map"
p = "inf"
eps = 0.5235987755982988
[plan]
box_radius = 6.0
n_pts = 200
n_dir = 1
refine_rounds = 2
"#;
    let c = ExperimentConfig::parse(text).unwrap();
    let exec = execute(&c, here()).unwrap();
    let json = emit_report(&exec.report, ReportFormat::Json).unwrap();
    let back: RunReport = serde_json::from_str(&json).unwrap();
    assert_eq!(emit_report(&back, ReportFormat::Json).unwrap(), json);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let w = &v["result"]["beta"]["witness"];
    assert!(w["x"].is_array() && w["y"].is_array());
    let csv = emit_report(&exec.report, ReportFormat::Csv).unwrap();
    assert!(csv.starts_with("name,value,provenance\nbeta,"));
}

#[test]
fn recover_and_triple_tasks() {
    let text = r#"
task = "recover"
triple = "classical:n=3,s=1"
[map]
kind = "linear"
operator = { source = "identity", n = 3 }
[recovery]
eps = 0.1
[data]
truth = [3.0, 0.0, 0.0]
"#;
    let c = ExperimentConfig::parse(text).unwrap();
    let exec = execute(&c, here()).unwrap();
    let r = exec.report.recovery().unwrap();
    assert!(r.measured.unwrap().h <= 0.3 + 1e-9);
    assert!((r.predicted.unwrap().h - 0.3).abs() < 1e-9);
    let json = exec.report.to_json().unwrap();
    let back: RunReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.to_json().unwrap(), json);

    let c = ExperimentConfig::parse("task = \"triple\"\ntriple = \"classical:n=6,s=2\"\n[plan]\nn_pts = 64\nrefine_rounds = 2\n")
        .unwrap();
    let exec = execute(&c, here()).unwrap();
    match &exec.report.result {
        RunResult::Triple(t) => {
            assert_eq!(t.s_a.value, 2.0);
            assert!(t.verdicts.iter().all(|v| v.pass));
        }
        _ => panic!("wrong result kind"),
    }
}

#[test]
fn noise_is_seeded_and_has_the_requested_norm() {
    let text = format!("{SCALAR_SOLVE}noise = {{ norm = \"l2\", magnitude = 0.01, seed = 5 }}\n");
    let c = ExperimentConfig::parse(&text).unwrap();
    let a = execute(&c, here()).unwrap();
    let b = execute(&c, here()).unwrap();
    assert_eq!(a.report.to_json().unwrap(), b.report.to_json().unwrap());
    let r = a.report.solver().unwrap();
    assert!((r.noise_level.unwrap() - 0.01).abs() < 1e-12);
    assert!(r.bound_holds().unwrap());
}

#[test]
fn run_writes_artifacts_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::parse(SCALAR_SOLVE).unwrap();
    c.output = Some(OutputSection { dir: Some(dir.path().join("out")), ..Default::default() });
    let m = run_experiment(&c, here()).unwrap();
    let kinds: Vec<&str> = m.artifacts.iter().map(|a| a.kind.as_str()).collect();
    assert_eq!(kinds, ["report", "trace", "summary"]);
    assert!(dir.path().join("out/manifest.json").exists());
    let report = load_report(dir.path().join("out/report.json")).unwrap();
    assert_eq!(report.config_hash, m.config_hash);
    assert_eq!(m.tool_version, VERSION);
}

#[test]
fn map_argument_forms() {
    assert!(resolve_map("scalar_sin", here()).is_ok());
    let s = resolve_map(r#"{"kind":"e_map","p":1}"#, here()).unwrap();
    assert!(matches!(s.kind, crate::maps::MapKind::EMap { .. }));
    let err = resolve_map("no_such_map", here()).unwrap_err();
    assert!(err.to_string().contains("tanh_4"));
    assert!(resolve_plan(r#"{"n_pts": 10}"#, here()).unwrap().n_pts == 10);
}
