use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::report::{Provenance, Quantity, Verdict};

use super::run::{RunReport, RunResult};

/// Output format of [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    /// Solver runs give the iteration trace; other runs a constants table.
    Csv,
    /// Markdown summary: constants, verdicts, bounds against measured errors.
    Md,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "md" | "md-table" | "markdown" => Ok(Self::Md),
            other => Err(Error::Parse(format!("unknown report format `{other}` (json, csv, md)"))),
        }
    }
}

/// One named number for the summary tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub value: f64,
    pub provenance: Option<Provenance>,
}

fn row(name: &str, value: f64, provenance: Option<Provenance>) -> Row {
    Row { name: name.into(), value, provenance }
}

fn q(name: &str, q: &Quantity) -> Row {
    row(name, q.value, Some(q.provenance))
}

/// A bound next to what was measured.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub name: String,
    pub bound: f64,
    pub measured: f64,
}

impl BoundRow {
    pub fn holds(&self) -> bool {
        self.measured <= self.bound + 1e-12
    }
}

/// Constants shown in the summary and the non-solver CSV.
pub fn constant_rows(report: &RunReport) -> Vec<Row> {
    use Provenance::*;
    let mut out = Vec::new();
    match &report.result {
        RunResult::Certify(s) => {
            for r in s.reports() {
                out.push(row(&r.constant, r.estimate, Some(r.provenance)));
            }
            out.push(row("stability_lower", s.stability.lower, Some(SampledUpperBound)));
            out.push(row("stability_upper", s.stability.upper, Some(SampledLowerBound)));
            if let Some(r) = &s.ratio {
                out.push(row("ratio_inf", r.inf, Some(SampledUpperBound)));
                out.push(row("ratio_sup", r.sup, Some(SampledLowerBound)));
            }
            out.push(row("operator_sigma_min", s.operator.sigma_min, Some(Exact)));
            out.push(row("operator_sigma_max", s.operator.sigma_max, Some(Exact)));
        }
        RunResult::Solve(s) => {
            let r = &s.report;
            for (k, v) in &r.constants {
                out.push(q(k, v));
            }
            if let Some(r0) = r.r0_predicted {
                out.push(row("r0_predicted", r0, Some(Formula)));
            }
            if let Some(c) = &r.bound_coefficient {
                out.push(q("bound_coefficient", c));
            }
            if let Some(d) = &r.decay {
                out.push(row("fitted_r1", d.r1, Some(Fitted)));
                out.push(row("fitted_c", d.c, Some(Fitted)));
            }
            out.push(row("iterations", r.iterations as f64, None));
            out.push(row("consistency_residual", r.consistency_residual, None));
        }
        RunResult::Recover(o) => {
            let r = &o.report;
            out.push(row("objective", r.objective, None));
            out.push(row("residual", r.residual, None));
            out.push(row("eps", r.eps, None));
            out.push(row("candidates", r.n_candidates as f64, None));
            if let Some(s) = r.sigma_truth {
                out.push(row("sigma_truth", s, Some(Exact)));
            }
            if let Some(c) = &r.constants {
                out.push(q("delta_2a", &c.delta_2a));
                out.push(q("delta_4a", &c.delta_4a));
                out.push(q("gamma_2a", &c.gamma_2a));
                out.push(q("gamma_4a", &c.gamma_4a));
                out.push(q("s_a", &c.s_a));
                out.push(q("a_a", &c.a_a));
                out.push(q("hypothesis", &c.hypothesis));
                for (name, v) in [("d", &c.d), ("beta", &c.beta), ("gamma3", &c.gamma3)] {
                    if let Some(v) = v {
                        out.push(q(name, v));
                    }
                }
            }
        }
        RunResult::Triple(t) => {
            out.push(q("s_a", &t.s_a));
            out.push(row("a_a", t.a_a.estimate, Some(t.a_a.provenance)));
        }
    }
    out
}

/// Bounds with the matching measured errors, when both are known.
pub fn bound_rows(report: &RunReport) -> Vec<BoundRow> {
    let mut out = Vec::new();
    match &report.result {
        RunResult::Solve(s) => {
            let r = &s.report;
            if let (Some(b), Some(m)) = (&r.error_bound, &r.measured_error) {
                let measured = if r.bound_norm == "linf" { m.linf } else { m.l2 };
                out.push(BoundRow { name: format!("error ({})", r.bound_norm), bound: b.value, measured });
            }
            if let Some(r0) = r.r0_predicted {
                if let Some(m) = r.max_ratio_above_floor() {
                    out.push(BoundRow { name: "step ratio".into(), bound: r0, measured: m });
                }
            }
        }
        RunResult::Recover(o) => {
            if let (Some(p), Some(m)) = (&o.report.predicted, &o.report.measured) {
                out.push(BoundRow { name: "error (H)".into(), bound: p.h, measured: m.h });
                out.push(BoundRow { name: "error (M)".into(), bound: p.m, measured: m.m });
            }
        }
        _ => {}
    }
    out
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "n/a".into()
    } else if v == 0.0 || (1e-4..1e6).contains(&v.abs()) {
        format!("{v:.6}")
    } else {
        format!("{v:.4e}")
    }
}

fn prov(p: Option<Provenance>) -> String {
    match p {
        Some(p) => serde_json::to_value(p).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        None => String::new(),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn csv_text(report: &RunReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    match report.solver() {
        Some(r) => {
            w.write_record(["iter", "residual", "ratio", "err_l2", "err_linf"])?;
            for t in &r.trace {
                w.write_record([t.iter.to_string(), format!("{:e}", t.residual), opt(t.ratio), opt(t.err_l2), opt(t.err_linf)])?;
            }
        }
        None => {
            w.write_record(["name", "value", "provenance"])?;
            for r in constant_rows(report) {
                w.write_record([r.name, format!("{:e}", r.value), prov(r.provenance)])?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

fn verdict_line(v: &Verdict) -> String {
    format!(
        "| {} | {} | {} | {} | {} |",
        v.condition,
        num(v.value),
        num(v.threshold),
        if v.pass { "pass" } else { "FAIL" },
        v.note.as_deref().unwrap_or("")
    )
}

fn md_text(report: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {} ({})\n", report.label(), report.task);
    let _ = writeln!(s, "- tool: {} {}", report.tool, report.version);
    let _ = writeln!(s, "- seed: {}", report.seed);
    let _ = writeln!(s, "- config hash: `{}`", report.config_hash);
    match &report.result {
        RunResult::Solve(o) => {
            let r = &o.report;
            let _ = writeln!(s, "- algorithm: {}", r.algorithm);
            let _ = writeln!(s, "- converged: {} after {} iterations", r.converged, r.iterations);
            if r.forced {
                let _ = writeln!(s, "- forced past a failed precondition; bounds are unverified");
            }
        }
        RunResult::Recover(o) => {
            let r = &o.report;
            let _ = writeln!(s, "- triple: {}", o.triple);
            let _ = writeln!(s, "- feasible: {}, certified global: {}", r.feasible, r.certified_global);
            if let Some(n) = &r.note {
                let _ = writeln!(s, "- note: {n}");
            }
        }
        RunResult::Certify(c) => {
            let _ = writeln!(s, "- map: {}", c.map);
            let _ = writeln!(s, "- output norm: {}", c.output_norm);
        }
        RunResult::Triple(t) => {
            let _ = writeln!(s, "- triple: {}", t.triple);
        }
    }

    let _ = writeln!(s, "\n## Constants\n\n| name | value | provenance |\n|---|---|---|");
    for r in constant_rows(report) {
        let _ = writeln!(s, "| {} | {} | {} |", r.name, num(r.value), prov(r.provenance));
    }
    let verdicts = report.result.verdicts();
    let _ = writeln!(s, "\n## Verdicts\n");
    if verdicts.is_empty() {
        let _ = writeln!(s, "none");
    } else {
        let _ = writeln!(s, "| condition | value | threshold | result | note |\n|---|---|---|---|---|");
        for v in verdicts {
            let _ = writeln!(s, "{}", verdict_line(v));
        }
    }
    let bounds = bound_rows(report);
    if !bounds.is_empty() {
        let _ = writeln!(s, "\n## Bounds\n\n| quantity | bound | measured | holds |\n|---|---|---|---|");
        for b in bounds {
            let _ = writeln!(s, "| {} | {} | {} | {} |", b.name, num(b.bound), num(b.measured), if b.holds() { "yes" } else { "NO" });
        }
    }
    s
}

/// Renders a report. JSON output round-trips through [`RunReport`].
pub fn emit_report(report: &RunReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Csv => csv_text(report),
        ReportFormat::Md => Ok(md_text(report)),
    }
}
