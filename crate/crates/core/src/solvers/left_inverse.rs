use std::collections::BTreeMap;

use nalgebra::DVector;

use super::{check_problem, gate, measured, noise_norm, run_iteration, IterationConstants, SolverConfig, SolverReport};
use crate::error::{Error, Result};
use crate::maps::DifferentiableMap;
use crate::report::{Quantity, Verdict};
use crate::spaces::DenseOperator;

/// `x ← x − μ T†(F(x) − z)`.
///
/// Preconditions use sampled constants: `μ ≤ 1/sup(‖F'y‖/‖Ty‖)` and
/// `β‖T‖‖T†‖ < 1`. Operator norms are spectral.
pub fn left_inverse_iteration(
    f: &dyn DifferentiableMap,
    t: &DenseOperator,
    tdag: &DenseOperator,
    z: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    cfg.validate()?;
    check_problem(f, t, z)?;
    if tdag.rows() != t.cols() || tdag.cols() != t.rows() {
        return Err(Error::invalid(format!(
            "left inverse is {}x{}, expected {}x{}",
            tdag.rows(),
            tdag.cols(),
            t.cols(),
            t.rows()
        )));
    }
    if !t.is_bounded_below() {
        return Err(Error::NoLeftInverse { sigma_min: t.sigma_min() });
    }
    let prod = tdag.matrix() * t.matrix();
    let n = t.cols();
    let defect = (&prod - nalgebra::DMatrix::<f64>::identity(n, n)).amax();
    if defect > 1e-8 {
        return Err(Error::invalid(format!("supplied T† is not a left inverse of T (‖T†T − I‖max = {defect:e})")));
    }
    if !f.output_norm().is_l2() && !cfg.force {
        return Err(Error::Unsupported(
            "left-inverse certificate is computed with spectral norms; use an ℓ2 output norm or force".into(),
        ));
    }

    let c = IterationConstants::resolve(cfg, f, t)?;
    let t_norm = t.norm();
    let tdag_norm = tdag.sigma_max();
    let mu = cfg.mu;
    let mut verdicts = Vec::new();
    let mu_max = 1.0 / c.ratio_sup;
    let step = Verdict {
        condition: "step_size_window".into(),
        value: mu,
        threshold: mu_max,
        pass: mu <= mu_max,
        note: None,
    };
    gate(&mut verdicts, step, cfg.force)?;
    let kappa = c.beta * t_norm * tdag_norm;
    gate(&mut verdicts, Verdict::below("beta_times_condition_below_1", kappa, 1.0), cfg.force)?;

    let r0 = 1.0 - mu * (1.0 - kappa) * c.ratio_inf;
    let coefficient = tdag_norm / ((1.0 - kappa) * c.ratio_inf);

    let x0 = cfg.initial(n)?;
    let truth = cfg.truth(n)?;
    let tdag_m = tdag.matrix().clone();
    let run = run_iteration(x0, cfg, truth.as_ref(), false, |x| {
        x - (&tdag_m * (f.eval(x) - z)) * mu
    })?;
    let consistency = (&tdag_m * (f.eval(&run.x) - z)).norm();
    let noise = noise_norm(f, z, truth.as_ref(), cfg, &f.output_norm());

    let mut constants = BTreeMap::new();
    constants.insert("beta".into(), Quantity::new(c.beta, c.provenance));
    constants.insert("ratio_inf".into(), Quantity::new(c.ratio_inf, c.provenance));
    constants.insert("ratio_sup".into(), Quantity::new(c.ratio_sup, c.provenance));
    constants.insert("t_norm".into(), Quantity::exact(t_norm));
    constants.insert("tdag_norm".into(), Quantity::exact(tdag_norm));

    let mut report = SolverReport {
        algorithm: "left-inverse".into(),
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
