use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plan::{pattern_search, SamplingPlan};
use super::pool::{check_shapes, normalize, Objective, Pool};
use crate::error::{Error, Result};
use crate::maps::DifferentiableMap;
use crate::report::{Provenance, Verdict};
use crate::rng::{stream, unit_vector};
use crate::spaces::{DenseOperator, NormSpec};

/// Point(s) at which an estimate is attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<f64>>,
}

/// One estimated constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub constant: String,
    pub estimate: f64,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub plan: SamplingPlan,
    pub n_samples: usize,
    #[serde(default)]
    pub verdicts: Vec<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

/// F has the same derivative as T everywhere.
fn coincides(f: &dyn DifferentiableMap, t: &DenseOperator) -> bool {
    f.is_linear() && f.derivative(&DVector::zeros(f.in_dim())) == *t.matrix()
}

fn sup_report(
    pool: &Pool,
    name: &str,
    plan: &SamplingPlan,
    exact: bool,
    value: impl Fn(&super::pool::DerivSample) -> f64,
) -> CertificationReport {
    let (i, v) = pool.argmax(value);
    let s = &pool.samples[i];
    CertificationReport {
        constant: name.to_string(),
        estimate: v,
        provenance: if exact { Provenance::Exact } else { Provenance::SampledLowerBound },
        witness: Some(Witness { x: vec_of(&s.x), y: Some(vec_of(&s.y)), z: None }),
        plan: plan.clone(),
        n_samples: pool.samples.len(),
        verdicts: Vec::new(),
        note: None,
    }
}

/// Sampled `β_{F,T} = sup ‖F'(x)y/‖F'(x)y‖ − Ty/‖Ty‖‖` in the map's output norm.
pub fn beta_ft(f: &dyn DifferentiableMap, t: &DenseOperator, plan: &SamplingPlan) -> Result<CertificationReport> {
    let pool = Pool::build(f, t, plan, &[Objective::Beta])?;
    Ok(sup_report(&pool, "beta", plan, coincides(f, t), |s| s.beta(&pool.norm)))
}

/// Sampled `δ_{F,T} = sup ‖F'(x)y − Ty‖/‖Ty‖`.
pub fn delta_ft(f: &dyn DifferentiableMap, t: &DenseOperator, plan: &SamplingPlan) -> Result<CertificationReport> {
    let pool = Pool::build(f, t, plan, &[Objective::Delta])?;
    Ok(sup_report(&pool, "delta", plan, coincides(f, t), |s| s.delta(&pool.norm)))
}

/// Sampled largest angle between `F'(x)y` and `Ty`; needs a Euclidean output norm.
pub fn theta_ft(f: &dyn DifferentiableMap, t: &DenseOperator, plan: &SamplingPlan) -> Result<CertificationReport> {
    require_l2(f)?;
    let pool = Pool::build(f, t, plan, &[Objective::Beta])?;
    Ok(sup_report(&pool, "theta", plan, coincides(f, t), |s| s.theta()))
}

fn require_l2(f: &dyn DifferentiableMap) -> Result<()> {
    if !f.output_norm().is_l2() {
        return Err(Error::Unsupported(format!(
            "angles need a Euclidean output norm, map uses {}",
            f.output_norm()
        )));
    }
    Ok(())
}

/// Sampled `α_F = sup_y inf_z sup_x ‖F'(x)y/‖F'(x)y‖ − z‖` over unit `z`.
///
/// The inner infimum runs over a candidate list (mean direction, the
/// direction of `Ty` when `t` is given, a grid, sample directions) followed
/// by compass refinement. With `t` given the result never exceeds the
/// β estimate built on the same base samples.
pub fn alpha_f(
    f: &dyn DifferentiableMap,
    t: Option<&DenseOperator>,
    plan: &SamplingPlan,
) -> Result<CertificationReport> {
    let identity;
    let t_used = match t {
        Some(t) => t,
        None => {
            // directions of Ty are not needed; any injective stand-in keeps the pool uniform
            identity = DenseOperator::new(DMatrix::from_fn(f.out_dim(), f.in_dim(), |i, j| {
                if i == j % f.out_dim() { 1.0 } else { 0.0 }
            }))?;
            &identity
        }
    };
    let pool = match Pool::build(f, t_used, plan, &[]) {
        Err(Error::NotBoundedBelow(_)) if t.is_none() => {
            return Err(Error::Unsupported("alpha without an operator needs out_dim >= in_dim".into()))
        }
        other => other?,
    };
    Ok(alpha_on_pool(&pool, t.is_some(), plan, t.is_some() && coincides(f, t_used)))
}

pub(crate) fn alpha_on_pool(pool: &Pool, use_t: bool, plan: &SamplingPlan, exact: bool) -> CertificationReport {
    let norm = &pool.norm;
    let m = pool.samples[0].fy.len();
    let grid = candidate_grid(m, norm, plan.seed);
    let per_dir: Vec<(f64, DVector<f64>)> = (0..pool.n_y)
        .into_par_iter()
        .map(|j| {
            let dirs: Vec<DVector<f64>> = (0..pool.n_x)
                .map(|i| normalize(&pool.samples[i * pool.n_y + j].fy, norm))
                .collect();
            let cost = |z: &DVector<f64>| dirs.iter().fold(0.0f64, |acc, u| acc.max(norm.norm(&(u - z))));
            let mut cands: Vec<DVector<f64>> = Vec::new();
            if use_t {
                cands.push(normalize(&pool.samples[j].ty, norm));
            }
            let sum: DVector<f64> = dirs.iter().fold(DVector::zeros(m), |a, u| a + u);
            if norm.norm(&sum) > 1e-12 {
                cands.push(normalize(&sum, norm));
            }
            cands.extend(grid.iter().cloned());
            let stride = (dirs.len() / 64).max(1);
            cands.extend(dirs.iter().step_by(stride).cloned());
            let mut best = (f64::INFINITY, cands[0].clone());
            for c in cands {
                let v = cost(&c);
                if v < best.0 {
                    best = (v, c);
                }
            }
            if plan.refine_rounds > 0 {
                let step = if m == 2 { PI / 720.0 } else { 0.25 };
                let (z, v) = pattern_search(
                    best.1.iter().copied().collect(),
                    -best.0,
                    vec![step; m],
                    &vec![None; m],
                    plan.refine_rounds,
                    |p| {
                        let z = DVector::from_column_slice(p);
                        let zn = norm.norm(&z);
                        (zn > 1e-12).then(|| -cost(&(z / zn)))
                    },
                );
                if -v < best.0 {
                    let z = DVector::from_vec(z);
                    let zn = norm.norm(&z);
                    best = (-v, z / zn);
                }
            }
            best
        })
        .collect();
    let mut arg = 0;
    for (j, r) in per_dir.iter().enumerate() {
        if r.0 > per_dir[arg].0 {
            arg = j;
        }
    }
    CertificationReport {
        constant: "alpha".into(),
        estimate: per_dir[arg].0,
        provenance: if exact { Provenance::Exact } else { Provenance::Sampled },
        witness: Some(Witness {
            x: Vec::new(),
            y: Some(vec_of(&pool.samples[arg].y)),
            z: Some(vec_of(&per_dir[arg].1)),
        }),
        plan: plan.clone(),
        n_samples: pool.n_base(),
        verdicts: Vec::new(),
        note: Some("inner sup over sampled points, inner inf over finitely many refined candidates".into()),
    }
}

fn candidate_grid(m: usize, norm: &NormSpec, seed: u64) -> Vec<DVector<f64>> {
    let mut out = Vec::new();
    if m == 2 {
        for k in 0..720 {
            let a = k as f64 * PI / 360.0;
            let v = DVector::from_vec(vec![a.cos(), a.sin()]);
            out.push(normalize(&v, norm));
        }
        return out;
    }
    for k in 0..m {
        for s in [1.0, -1.0] {
            let mut e = DVector::zeros(m);
            e[k] = s;
            out.push(normalize(&e, norm));
        }
    }
    let mut rng = stream(seed, 0xa1fa);
    for _ in 0..64 {
        out.push(normalize(&unit_vector(&mut rng, m), norm));
    }
    out
}

/// Sampled envelope `A ≤ ‖F'(x)y‖/‖y‖₂ ≤ B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Smallest ratio found; an upper bound of the true infimum.
    pub lower: f64,
    /// Largest ratio found; a lower bound of the true supremum.
    pub upper: f64,
    pub lower_witness: Vec<f64>,
    pub upper_witness: Vec<f64>,
    /// The lower bound vanished (≤ 1e-12); certificates depending on it refuse.
    pub degenerate: bool,
    /// Extremes over `y` were computed exactly at every sampled `x`.
    pub exact_inner: bool,
    pub plan: SamplingPlan,
}

/// Minimum and maximum of `per_x` over the base points, each polished by
/// compass search over `x`.
fn x_extremes(
    dim: usize,
    plan: &SamplingPlan,
    per_x: impl Fn(&DVector<f64>) -> Option<(f64, f64)> + Sync,
) -> Result<((f64, DVector<f64>), (f64, DVector<f64>))> {
    plan.validate()?;
    let xs = plan.points(dim);
    let vals: Vec<Option<(f64, f64)>> = xs.par_iter().map(&per_x).collect();
    let mut lo = (f64::INFINITY, 0usize);
    let mut hi = (f64::NEG_INFINITY, 0usize);
    for (i, v) in vals.iter().enumerate() {
        let (a, b) = v.ok_or_else(|| Error::SingularDerivative(format!("at x = {:?}", xs[i].as_slice())))?;
        if a < lo.0 {
            lo = (a, i);
        }
        if b > hi.0 {
            hi = (b, i);
        }
    }
    let mut lo = (lo.0, xs[lo.1].clone());
    let mut hi = (hi.0, xs[hi.1].clone());
    if plan.refine_rounds > 0 {
        let steps = vec![plan.spacing(dim); dim];
        let clamp = vec![Some(plan.box_radius); dim];
        let polish = |start: &DVector<f64>, v0: f64, sign: f64, pick: fn((f64, f64)) -> f64| {
            pattern_search(start.iter().copied().collect(), sign * v0, steps.clone(), &clamp, plan.refine_rounds, |p| {
                per_x(&DVector::from_column_slice(p)).map(|r| sign * pick(r))
            })
        };
        let (p, v) = polish(&lo.1, lo.0, -1.0, |r| r.0);
        if -v < lo.0 {
            lo = (-v, DVector::from_vec(p));
        }
        let (p, v) = polish(&hi.1, hi.0, 1.0, |r| r.1);
        if v > hi.0 {
            hi = (v, DVector::from_vec(p));
        }
    }
    Ok((lo, hi))
}

fn sv_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let sv = m.singular_values();
    let hi = sv.max();
    let lo = if m.nrows() < m.ncols() { 0.0 } else { sv.min() };
    (lo, hi)
}

/// Sampled uniform stability envelope of the derivative.
pub fn uniform_stability(f: &dyn DifferentiableMap, plan: &SamplingPlan) -> Result<StabilityReport> {
    let norm = f.output_norm();
    norm.check_dim(f.out_dim())?;
    let n = f.in_dim();
    let exact_inner = norm.is_l2() || n == 1;
    let dirs = plan.directions(n);
    let per_x = |x: &DVector<f64>| -> Option<(f64, f64)> {
        let j = f.derivative(x);
        if !j.iter().all(|v| v.is_finite()) {
            return None;
        }
        if norm.is_l2() {
            Some(sv_extremes(&j))
        } else if n == 1 {
            let r = norm.norm(&j.column(0).into_owned());
            Some((r, r))
        } else {
            let r: Vec<f64> = dirs.iter().map(|y| norm.norm(&(&j * y))).collect();
            Some((r.iter().copied().fold(f64::INFINITY, f64::min), r.iter().copied().fold(0.0, f64::max)))
        }
    };
    let ((lo, lo_x), (hi, hi_x)) = x_extremes(n, plan, per_x)?;
    Ok(StabilityReport {
        lower: lo,
        upper: hi,
        lower_witness: vec_of(&lo_x),
        upper_witness: vec_of(&hi_x),
        degenerate: lo <= 1e-12,
        exact_inner,
        plan: plan.clone(),
    })
}

/// Sampled bounds of `‖F'(x)y‖/‖Ty‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioBounds {
    /// Upper bound of the true infimum.
    pub inf: f64,
    /// Lower bound of the true supremum.
    pub sup: f64,
    pub exact_inner: bool,
}

/// Bounds of `‖F'(x)y‖/‖Ty‖`. With Euclidean norms the extremes over `y`
/// are the singular values of `F'(x)R⁻¹` where `T = QR`.
pub fn derivative_ratio_bounds(
    f: &dyn DifferentiableMap,
    t: &DenseOperator,
    plan: &SamplingPlan,
) -> Result<RatioBounds> {
    check_shapes(f, t)?;
    if !t.is_bounded_below() {
        return Err(Error::NotBoundedBelow(format!("sigma_min = {:e}", t.sigma_min())));
    }
    let norm = f.output_norm();
    let n = f.in_dim();
    let r_inv = if norm.is_l2() {
        let r = t.matrix().clone().qr().r();
        Some(r.try_inverse().ok_or_else(|| Error::NotBoundedBelow("triangular factor is singular".into()))?)
    } else {
        None
    };
    let dirs = plan.directions(n);
    let per_x = |x: &DVector<f64>| -> Option<(f64, f64)> {
        let j = f.derivative(x);
        if let Some(ri) = &r_inv {
            return Some(sv_extremes(&(j * ri)));
        }
        let r: Vec<f64> = dirs
            .iter()
            .map(|y| norm.norm(&(&j * y)) / norm.norm(&t.apply(y)))
            .collect();
        Some((r.iter().copied().fold(f64::INFINITY, f64::min), r.iter().copied().fold(0.0, f64::max)))
    };
    let ((lo, _), (hi, _)) = x_extremes(n, plan, per_x)?;
    Ok(RatioBounds { inf: lo, sup: hi, exact_inner: norm.is_l2() || n == 1 })
}

/// Norm data of the reference operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSummary {
    pub rows: usize,
    pub cols: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub bounded_below: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_inverse_norm: Option<f64>,
}

impl OperatorSummary {
    pub fn of(t: &DenseOperator) -> Self {
        Self {
            rows: t.rows(),
            cols: t.cols(),
            sigma_min: t.sigma_min(),
            sigma_max: t.sigma_max(),
            bounded_below: t.is_bounded_below(),
            left_inverse_norm: t.left_inverse().ok().map(|l| l.norm()),
        }
    }
}

/// Every map constant estimated on one shared sample pool, plus verdicts
/// for the sufficient conditions that consume them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationSuite {
    pub map: String,
    pub output_norm: NormSpec,
    pub operator: OperatorSummary,
    pub beta: CertificationReport,
    pub delta: CertificationReport,
    pub alpha: CertificationReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<CertificationReport>,
    /// Smallest sampled cosine between `F'(x)y` and `Ty` (Euclidean output only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_cosine: Option<f64>,
    pub stability: StabilityReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<RatioBounds>,
    pub verdicts: Vec<Verdict>,
}

const SAMPLED: &str = "estimate is a sampled lower bound of the true constant";

/// Runs the full certification of `F` against `T`.
pub fn certify_map(f: &dyn DifferentiableMap, t: &DenseOperator, plan: &SamplingPlan) -> Result<CertificationSuite> {
    let pool = Pool::build(f, t, plan, &[Objective::Beta, Objective::Delta])?;
    let exact = coincides(f, t);
    let norm = pool.norm.clone();
    let mut beta = sup_report(&pool, "beta", plan, exact, |s| s.beta(&norm));
    let mut delta = sup_report(&pool, "delta", plan, exact, |s| s.delta(&norm));
    let mut alpha = alpha_on_pool(&pool, true, plan, exact);
    let hilbert = norm.is_l2();
    let mut theta = hilbert.then(|| sup_report(&pool, "theta", plan, exact, |s| s.theta()));
    let min_cosine = hilbert.then(|| pool.samples.iter().map(|s| s.cosine()).fold(f64::INFINITY, f64::min));
    let stability = uniform_stability(f, plan)?;
    let ratio = if t.is_bounded_below() { Some(derivative_ratio_bounds(f, t, plan)?) } else { None };
    let operator = OperatorSummary::of(t);

    let b = beta.estimate;
    let d = delta.estimate;
    let mut verdicts = Vec::new();
    let a = Verdict::below("bi_lipschitz_alpha_below_1", alpha.estimate, 1.0)
        .with_note("alpha is a sampled estimate without a one-sided guarantee");
    alpha.verdicts.push(a.clone());
    verdicts.push(a);
    if operator.bounded_below {
        let v = Verdict::below("bi_lipschitz_beta_below_1", b, 1.0).with_note(SAMPLED);
        beta.verdicts.push(v.clone());
        verdicts.push(v);
        let v = Verdict::below("bi_lipschitz_delta_below_one_third", d, 1.0 / 3.0).with_note(SAMPLED);
        delta.verdicts.push(v.clone());
        verdicts.push(v);
        if let Some(li) = operator.left_inverse_norm {
            let v = Verdict::below("left_inverse_contraction", b * operator.sigma_max * li, 1.0).with_note(SAMPLED);
            beta.verdicts.push(v.clone());
            verdicts.push(v);
        }
    }
    if hilbert {
        let v = Verdict::below("hilbert_beta_below_sqrt2", b, SQRT_2).with_note(SAMPLED);
        beta.verdicts.push(v.clone());
        verdicts.push(v);
        let c = min_cosine.unwrap_or(0.0);
        let v = Verdict::above("positivity", c, 0.0).with_note("smallest sampled cosine between F'(x)y and Ty");
        if let Some(th) = theta.as_mut() {
            th.verdicts.push(v.clone());
        }
        verdicts.push(v);
        let v = Verdict::below("hilbert_delta_below_sqrt2_minus_1", d, SQRT_2 - 1.0).with_note(SAMPLED);
        delta.verdicts.push(v.clone());
        verdicts.push(v);
    }
    let v = Verdict::above("stability_lower_positive", stability.lower, 1e-12)
        .with_note("sampled infimum of the derivative ratio");
    verdicts.push(v);

    Ok(CertificationSuite {
        map: f.name(),
        output_norm: norm,
        operator,
        beta,
        delta,
        alpha,
        theta,
        min_cosine,
        stability,
        ratio,
        verdicts,
    })
}

impl CertificationSuite {
    /// The individual constant reports.
    pub fn reports(&self) -> Vec<&CertificationReport> {
        let mut v = vec![&self.beta, &self.delta, &self.alpha];
        v.extend(self.theta.as_ref());
        v
    }

    pub fn verdict(&self, condition: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.condition == condition)
    }
}
