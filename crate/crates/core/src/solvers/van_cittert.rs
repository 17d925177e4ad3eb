use std::collections::BTreeMap;

use nalgebra::DVector;

use super::{check_problem, gate, measured, noise_norm, run_iteration, IterationConstants, SolverConfig, SolverReport};
use crate::error::{Error, Result};
use crate::maps::DifferentiableMap;
use crate::report::{Quantity, Verdict};
use crate::spaces::DenseOperator;

/// Upper end of the admissible step window,
/// `(2 − β²)·σmin(T)·A / (‖T‖²·B²)` with `A`, `B` the stability bounds.
pub fn van_cittert_window(c: &IterationConstants, t: &DenseOperator) -> f64 {
    let tn = t.norm();
    (2.0 - c.beta * c.beta) * t.sigma_min() * c.stability_lower / (tn * tn * c.stability_upper * c.stability_upper)
}

/// Squared contraction factor for the step differences.
fn contraction_sq(c: &IterationConstants, t: &DenseOperator, mu: f64) -> f64 {
    let tn = t.norm();
    1.0 - mu * (2.0 - c.beta * c.beta) * t.sigma_min() * c.stability_lower
        + mu * mu * tn * tn * c.stability_upper * c.stability_upper
}

/// `u ← u − μ Tᵀ(F(u) − z)` in Euclidean norms.
pub fn van_cittert_iteration(
    f: &dyn DifferentiableMap,
    t: &DenseOperator,
    z: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    cfg.validate()?;
    check_problem(f, t, z)?;
    if !f.output_norm().is_l2() || !cfg.norm.is_l2() {
        return Err(Error::Unsupported("the Van Cittert iteration needs Euclidean norms".into()));
    }
    if !t.is_bounded_below() {
        return Err(Error::NoLeftInverse { sigma_min: t.sigma_min() });
    }
    let c = IterationConstants::resolve(cfg, f, t)?;
    let mu = cfg.mu;
    let mut verdicts = Vec::new();
    gate(&mut verdicts, Verdict::below("hilbert_beta_below_sqrt2", c.beta, std::f64::consts::SQRT_2), cfg.force)?;
    gate(&mut verdicts, Verdict::above("stability_lower_positive", c.stability_lower, 0.0), cfg.force)?;
    let window = van_cittert_window(&c, t);
    gate(&mut verdicts, Verdict::below("step_size_window", mu, window), cfg.force)?;

    let r1 = contraction_sq(&c, t, mu);
    let r0 = r1.max(0.0).sqrt();
    let tn = t.norm();
    let coefficient = 2.0 * tn / ((2.0 - c.beta * c.beta) * t.sigma_min() * c.stability_lower);

    let n = t.cols();
    let x0 = cfg.initial(n)?;
    let truth = cfg.truth(n)?;
    let tt = t.matrix().transpose();
    let run = run_iteration(x0, cfg, truth.as_ref(), false, |u| u - (&tt * (f.eval(u) - z)) * mu)?;
    let consistency = (&tt * (f.eval(&run.x) - z)).norm();
    let noise = noise_norm(f, z, truth.as_ref(), cfg, &f.output_norm());

    let mut constants = BTreeMap::new();
    constants.insert("beta".into(), Quantity::new(c.beta, c.provenance));
    constants.insert("stability_lower".into(), Quantity::new(c.stability_lower, c.provenance));
    constants.insert("stability_upper".into(), Quantity::new(c.stability_upper, c.provenance));
    constants.insert("t_norm".into(), Quantity::exact(tn));
    constants.insert("t_sigma_min".into(), Quantity::exact(t.sigma_min()));
    constants.insert("mu_window".into(), Quantity::formula(window));

    let mut report = SolverReport {
        algorithm: "van-cittert".into(),
        converged: run.converged,
        iterations: run.trace.len(),
        ratio_floor: run.floor,
        ratios: run.ratios,
        trace: run.trace,
        r0_predicted: Some(r0),
        final_point: run.x.iter().copied().collect(),
        bound_coefficient: Some(Quantity::formula(coefficient)),
        bound_norm: "l2".into(),
        noise_level: noise,
        error_bound: noise.map(|e| Quantity::formula(coefficient * e)),
        measured_error: measured(&run.x, truth.as_ref()),
        consistency_residual: consistency,
        constants,
        verdicts,
        forced: cfg.force,
        decay: None,
        iterates: run.iterates,
    };
    if let Some(q) = report.max_ratio_above_floor() {
        report.verdicts.push(Verdict {
            condition: "ratio_law".into(),
            value: q,
            threshold: r0 + 1e-9,
            pass: q <= r0 + 1e-9,
            note: None,
        });
    }
    Ok(report)
}
