use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_problem, gate, measured, noise_norm, run_iteration, IterationConstants, SolverConfig, SolverReport};
use super::van_cittert::van_cittert_window;
use crate::certify::SamplingPlan;
use crate::error::{Error, Result};
use crate::maps::DifferentiableMap;
use crate::report::{Provenance, Quantity, Verdict};
use crate::spaces::{DenseOperator, MatrixNorm, NormSpec};

/// Geometric fit `b_n ≤ c·r1ⁿ` of a product-norm sequence (`b[0]` is `b_1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub r1: f64,
    pub c: f64,
    pub b: Vec<f64>,
    /// Index of the first entry used by the slope fit.
    pub fit_start: usize,
}

/// Fits `ln b_n ≈ ln c + n ln r1` on the tail half of the positive entries,
/// then raises `c` until the inequality holds for every entry.
pub fn fit_decay(b: &[f64]) -> DecayFit {
    let pts: Vec<(f64, f64)> = b
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite() && **v > f64::MIN_POSITIVE)
        .map(|(i, v)| ((i + 1) as f64, v.ln()))
        .collect();
    if pts.is_empty() {
        return DecayFit { r1: 0.0, c: 0.0, b: b.to_vec(), fit_start: 0 };
    }
    let start = pts.len() / 2;
    let tail = &pts[start..];
    let r1 = if tail.len() < 2 {
        // one usable entry: the best single-step rate is the entry itself
        let (n, l) = pts[pts.len() - 1];
        (l / n).exp()
    } else {
        let m = tail.len() as f64;
        let mx = tail.iter().map(|p| p.0).sum::<f64>() / m;
        let my = tail.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = tail.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        (sxy / sxx).exp()
    };
    let ln_r = r1.ln();
    let c = pts.iter().map(|(n, l)| (l - n * ln_r).exp()).fold(0.0, f64::max);
    DecayFit { r1, c, b: b.to_vec(), fit_start: (tail.first().map(|p| p.0 as usize).unwrap_or(1)) - 1 }
}

/// Sampled sup of `‖G'(x)‖` over the plan's points.
pub(crate) fn sup_jacobian_norm(g: &dyn DifferentiableMap, plan: &SamplingPlan, norm: MatrixNorm) -> Result<f64> {
    let pts = if g.is_linear() { vec![DVector::zeros(g.in_dim())] } else { plan.points(g.in_dim()) };
    let vals: Vec<f64> = pts.par_iter().map(|p| norm.of(&g.derivative(p))).collect();
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// `∫₀¹ G'(a + s(b − a)) ds` by three-point Gauss–Legendre.
fn averaged_jacobian(g: &dyn DifferentiableMap, a: &DVector<f64>, b: &DVector<f64>) -> Result<DMatrix<f64>> {
    if g.is_linear() {
        return Ok(g.derivative(a));
    }
    let h = 0.5 * (0.6f64).sqrt();
    let nodes = [(0.5 - h, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + h, 5.0 / 18.0)];
    let d = b - a;
    let mut acc = DMatrix::zeros(g.out_dim(), g.in_dim());
    for (s, w) in nodes {
        acc += g.derivative(&(a + &d * s)) * w;
    }
    Ok(acc)
}

/// `x ← G(x)` with contraction certified in `norm_h` only. Convergence is
/// measured in `norm_b`, and the products of interval-averaged Jacobians are
/// tracked in `norm_a`.
pub fn fixed_point_iteration(
    g: &dyn DifferentiableMap,
    cfg: &SolverConfig,
    norm_a: MatrixNorm,
    norm_h: MatrixNorm,
    norm_b: NormSpec,
) -> Result<SolverReport> {
    cfg.validate()?;
    if g.in_dim() != g.out_dim() {
        return Err(Error::invalid(format!("G maps {} -> {}; a self map is needed", g.in_dim(), g.out_dim())));
    }
    let n = g.in_dim();
    norm_b.check_dim(n)?;
    let sup_h = sup_jacobian_norm(g, &cfg.plan, norm_h)?;
    let sup_a = sup_jacobian_norm(g, &cfg.plan, norm_a)?;
    let prov = if g.is_linear() { Provenance::Exact } else { Provenance::SampledLowerBound };
    let mut verdicts = Vec::new();
    gate(&mut verdicts, Verdict::below("jacobian_h_norm_below_1", sup_h, 1.0), cfg.force)?;

    let run_cfg = SolverConfig { norm: norm_b.clone(), ..cfg.clone() };
    let x0 = cfg.initial(n)?;
    let truth = cfg.truth(n)?;
    let run = run_iteration(x0, &run_cfg, truth.as_ref(), true, |x| g.eval(x))?;

    let mut prod = DMatrix::<f64>::identity(n, n);
    let mut b = Vec::with_capacity(run.steps.len());
    for (a, next) in &run.steps {
        prod = averaged_jacobian(g, a, next)? * prod;
        b.push(norm_a.of(&prod));
    }
    let decay = fit_decay(&b);
    let consistency = norm_b.norm(&(g.eval(&run.x) - &run.x));

    let mut constants = BTreeMap::new();
    constants.insert("jacobian_h_sup".into(), Quantity::new(sup_h, prov));
    constants.insert("jacobian_a_sup".into(), Quantity::new(sup_a, prov));
    constants.insert("decay_r1".into(), Quantity::new(decay.r1, Provenance::Fitted));
    constants.insert("decay_c".into(), Quantity::new(decay.c, Provenance::Fitted));
    verdicts.push(Verdict::below("fitted_decay_rate_below_1", decay.r1, 1.0));

    Ok(SolverReport {
        algorithm: "fixed-point".into(),
        converged: run.converged,
        iterations: run.trace.len(),
        ratio_floor: run.floor,
        ratios: run.ratios,
        trace: run.trace,
        r0_predicted: None,
        final_point: run.x.iter().copied().collect(),
        bound_coefficient: None,
        bound_norm: norm_b.to_string(),
        noise_level: None,
        error_bound: None,
        measured_error: measured(&run.x, truth.as_ref()),
        consistency_residual: consistency,
        constants,
        verdicts,
        forced: cfg.force,
        decay: Some(decay),
        iterates: run.iterates,
    })
}

/// `G(x) = x − μ Tᵀ(F(x) − z)`.
struct ResidualStep<'a> {
    f: &'a dyn DifferentiableMap,
    tt: DMatrix<f64>,
    z: &'a DVector<f64>,
    mu: f64,
}

impl DifferentiableMap for ResidualStep<'_> {
    fn in_dim(&self) -> usize {
        self.f.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.f.in_dim()
    }
    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        x - (&self.tt * (self.f.eval(x) - self.z)) * self.mu
    }
    fn jacobian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let j = self.f.derivative(x);
        let n = self.in_dim();
        Some(DMatrix::identity(n, n) - (&self.tt * j) * self.mu)
    }
    fn zero_normalized(&self) -> bool {
        false
    }
    fn name(&self) -> String {
        format!("residual-step({})", self.f.name())
    }
    fn is_linear(&self) -> bool {
        self.f.is_linear()
    }
}

/// The Van Cittert recursion analysed as a fixed-point map, with errors in ℓ∞.
///
/// The bound constant comes from the decay of `‖(I − μTᵀF'(x∞))ᵏ‖∞`, summed
/// as a Neumann series: `C = μ‖Tᵀ‖∞ Σ_k ‖Mᵏ‖∞`. It linearizes at the computed
/// limit, so it is reported as fitted.
pub fn localized_iteration(
    f: &dyn DifferentiableMap,
    t: &DenseOperator,
    z: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    cfg.validate()?;
    check_problem(f, t, z)?;
    if !f.output_norm().is_l2() {
        return Err(Error::Unsupported("the contraction is certified in Euclidean norms".into()));
    }
    if !t.is_bounded_below() {
        return Err(Error::NoLeftInverse { sigma_min: t.sigma_min() });
    }
    let c = IterationConstants::resolve(cfg, f, t)?;
    let mut verdicts = Vec::new();
    gate(&mut verdicts, Verdict::below("hilbert_beta_below_sqrt2", c.beta, std::f64::consts::SQRT_2), cfg.force)?;
    gate(&mut verdicts, Verdict::above("stability_lower_positive", c.stability_lower, 0.0), cfg.force)?;
    let window = van_cittert_window(&c, t);
    gate(&mut verdicts, Verdict::below("step_size_window", cfg.mu, window), cfg.force)?;

    let tt = t.matrix().transpose();
    let g = ResidualStep { f, tt: tt.clone(), z, mu: cfg.mu };
    let mut report = fixed_point_iteration(&g, cfg, MatrixNorm::MaxRowSum, MatrixNorm::Spectral, NormSpec::linf())?;
    report.algorithm = "localized".into();
    verdicts.append(&mut report.verdicts);
    report.verdicts = verdicts;
    report.consistency_residual = (&tt * (f.eval(&report.final_point()) - z)).norm();

    // Neumann series of the linearization at the limit
    let m = g.derivative(&report.final_point());
    let n = m.nrows();
    let mut pw = DMatrix::<f64>::identity(n, n);
    let mut partial = 0.0;
    let mut powers = Vec::new();
    for _ in 0..5000 {
        partial += MatrixNorm::MaxRowSum.of(&pw);
        pw = &m * &pw;
        let b = MatrixNorm::MaxRowSum.of(&pw);
        powers.push(b);
        if b < 1e-17 {
            break;
        }
    }
    let fit = fit_decay(&powers);
    let tail = if fit.r1 < 1.0 {
        let k = powers.len() as f64;
        fit.c * fit.r1.powf(k) / (1.0 - fit.r1)
    } else {
        f64::INFINITY
    };
    let coefficient = cfg.mu * MatrixNorm::MaxRowSum.of(&tt) * (partial + tail);
    let truth = cfg.truth(f.in_dim())?;
    let noise = noise_norm(f, z, truth.as_ref(), cfg, &NormSpec::linf());
    report.bound_coefficient = Some(Quantity::new(coefficient, Provenance::Fitted));
    report.noise_level = noise;
    report.error_bound = noise.map(|e| Quantity::new(coefficient * e, Provenance::Fitted));
    report.bound_norm = "linf".into();
    report.constants.insert("beta".into(), Quantity::new(c.beta, c.provenance));
    report.constants.insert("mu_window".into(), Quantity::formula(window));
    report.constants.insert("limit_power_r".into(), Quantity::new(fit.r1, Provenance::Fitted));
    report.constants.insert("limit_power_c".into(), Quantity::new(fit.c, Provenance::Fitted));
    Ok(report)
}

/// Seeded `n×n` matrix with spectral norm `spectral` and max-row-sum norm
/// `row_sum`: a scaled Cayley rotation `s(I − tK)⁻¹(I + tK)` with `t` found by
/// bisection. Needs `spectral ≤ row_sum < spectral·√n` roughly.
pub fn seeded_contraction(n: usize, spectral: f64, row_sum: f64, seed: u64) -> Result<DMatrix<f64>> {
    if n < 2 || !(spectral > 0.0) || row_sum < spectral {
        return Err(Error::invalid("need n ≥ 2 and row_sum ≥ spectral > 0"));
    }
    let g = crate::rng::gaussian_matrix(seed, n, n);
    let k = &g - g.transpose();
    let id = DMatrix::<f64>::identity(n, n);
    let rot = |t: f64| -> Option<DMatrix<f64>> { Some((&id - &k * t).try_inverse()? * (&id + &k * t)) };
    let target = row_sum / spectral;
    let excess = |t: f64| rot(t).map(|q| MatrixNorm::MaxRowSum.of(&q) - target);
    let (mut lo, mut hi) = (0.0, 1e-3);
    while excess(hi).ok_or_else(|| Error::invalid("singular Cayley factor"))? < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Infeasible(format!("row-sum norm {row_sum} not reachable at n = {n}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid).unwrap_or(1.0) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(rot(hi).expect("checked during bracketing") * spectral)
}
