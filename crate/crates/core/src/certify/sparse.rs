//! Constants on unions of subspaces: RIP, linearization error, and the
//! derived sparse Riesz / almost linear / recovery constants.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plan::{pattern_search, SamplingPlan};
use super::pool::check_shapes;
use crate::error::{Error, Result};
use crate::maps::DifferentiableMap;
use crate::report::Provenance;
use crate::rng::{gaussian_vector, stream};
use crate::spaces::{sum_union, DenseOperator, SubspaceUnion};

/// Exact restricted isometry constant of `T` on `kA`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RipReport {
    pub k: usize,
    /// `max_V max(σ_max(TB_V)² − 1, 1 − σ_min(TB_V)²)`.
    pub delta: f64,
    /// Index of the worst subspace in `sum_union(A, k)`.
    pub worst_subspace: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_support: Option<Vec<usize>>,
    pub n_subspaces: usize,
    /// Extremes of `‖Tz‖²` over unit `z ∈ kA`.
    pub min_sq: f64,
    pub max_sq: f64,
}

/// `δ_{kA}(T)` by enumerating every subspace of `kA`.
pub fn rip_delta(t: &DenseOperator, union: &SubspaceUnion, k: usize, cap: u128) -> Result<RipReport> {
    if t.cols() != union.ambient_dim() {
        return Err(Error::invalid(format!(
            "operator has {} columns, union lives in dimension {}",
            t.cols(),
            union.ambient_dim()
        )));
    }
    let ka = sum_union(union, k, cap)?;
    let per: Vec<(f64, f64)> = ka
        .bases()
        .par_iter()
        .map(|b| {
            let tb = t.matrix() * b;
            let sv = tb.singular_values();
            let hi = sv.max();
            let lo = if tb.nrows() < tb.ncols() { 0.0 } else { sv.min() };
            (lo * lo, hi * hi)
        })
        .collect();
    let mut worst = 0;
    let mut best_delta = f64::NEG_INFINITY;
    let mut min_sq = f64::INFINITY;
    let mut max_sq: f64 = 0.0;
    for (i, &(lo, hi)) in per.iter().enumerate() {
        let d = (hi - 1.0).max(1.0 - lo);
        if d > best_delta {
            best_delta = d;
            worst = i;
        }
        min_sq = min_sq.min(lo);
        max_sq = max_sq.max(hi);
    }
    Ok(RipReport {
        k,
        delta: best_delta,
        worst_subspace: worst,
        worst_support: ka.supports().map(|s| s[worst].clone()),
        n_subspaces: ka.len(),
        min_sq,
        max_sq,
    })
}

/// Sampled linearization error `γ_{F,T}(kA)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub k: usize,
    pub estimate: f64,
    pub provenance: Provenance,
    /// Estimates restricted to `jA` for `j = 1..=k`; the estimate is their maximum.
    pub per_level: Vec<f64>,
    pub witness_x: Vec<f64>,
    pub witness_z: Vec<f64>,
    pub plan: SamplingPlan,
}

/// Estimates `sup_x sup_{z ∈ kA} ‖F(x+z) − F(x) − Tz‖/‖z‖`.
///
/// `x` ranges over the plan's box. Every level `jA`, `j ≤ k`, is sampled
/// from its own stream, so estimates are nondecreasing in `k`.
pub fn gamma_ka(
    f: &dyn DifferentiableMap,
    t: &DenseOperator,
    union: &SubspaceUnion,
    k: usize,
    plan: &SamplingPlan,
    cap: u128,
) -> Result<GammaReport> {
    plan.validate()?;
    check_shapes(f, t)?;
    if union.ambient_dim() != f.in_dim() {
        return Err(Error::invalid("union and map dimensions differ"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    let levels = (1..=k)
        .map(|j| sum_union(union, j, cap))
        .collect::<Result<Vec<_>>>()?;
    let exact = f.is_linear() && f.derivative(&DVector::zeros(f.in_dim())) == *t.matrix();
    let mut per_level = Vec::with_capacity(k);
    let mut best = (f64::NEG_INFINITY, DVector::zeros(f.in_dim()), DVector::zeros(f.in_dim()));
    for (j, level) in levels.iter().enumerate() {
        let (v, x, z) = gamma_level(f, t, level, j + 1, plan);
        per_level.push(if exact { 0.0 } else { v });
        if v > best.0 {
            best = (v, x, z);
        }
    }
    Ok(GammaReport {
        k,
        estimate: if exact { 0.0 } else { best.0 },
        provenance: if exact { Provenance::Exact } else { Provenance::SampledLowerBound },
        per_level,
        witness_x: best.1.iter().copied().collect(),
        witness_z: best.2.iter().copied().collect(),
        plan: plan.clone(),
    })
}

fn linearization_ratio(f: &dyn DifferentiableMap, t: &DenseOperator, x: &DVector<f64>, z: &DVector<f64>) -> Option<f64> {
    let zn = z.norm();
    if !(zn > 0.0 && zn.is_finite()) {
        return None;
    }
    let norm = f.output_norm();
    let r = f.eval(&(x + z)) - f.eval(x) - t.apply(z);
    Some(norm.norm(&r) / zn)
}

fn gamma_level(
    f: &dyn DifferentiableMap,
    t: &DenseOperator,
    level: &SubspaceUnion,
    j: usize,
    plan: &SamplingPlan,
) -> (f64, DVector<f64>, DVector<f64>) {
    let n = f.in_dim();
    let xs = plan.points(n);
    let mut rng = stream(plan.seed, 0x9a00 + j as u64);
    // (subspace, coefficients) pairs shared by every base point
    let zs: Vec<(usize, DVector<f64>)> = (0..plan.n_dir)
        .map(|_| {
            let i = rng.random_range(0..level.len());
            let d = level.basis(i).ncols();
            let c = gaussian_vector(&mut rng, d);
            let scale = plan.box_radius * 10f64.powf(-3.0 * rng.random::<f64>());
            let cn = c.norm().max(1e-300);
            (i, c * (scale / cn))
        })
        .collect();
    let rows: Vec<(f64, usize)> = xs
        .par_iter()
        .map(|x| {
            let mut best = (f64::NEG_INFINITY, 0);
            for (q, (i, c)) in zs.iter().enumerate() {
                let z = level.basis(*i) * c;
                if let Some(v) = linearization_ratio(f, t, x, &z) {
                    if v > best.0 {
                        best = (v, q);
                    }
                }
            }
            best
        })
        .collect();
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| rows[b].0.total_cmp(&rows[a].0).then(a.cmp(&b)));
    let starts: Vec<usize> = order.into_iter().take(if plan.refine_rounds > 0 { 3 } else { 1 }).collect();
    let results: Vec<(f64, DVector<f64>, DVector<f64>)> = starts
        .par_iter()
        .map(|&xi| {
            let (v0, q) = rows[xi];
            let (sub, c0) = &zs[q];
            let basis = level.basis(*sub);
            let d = basis.ncols();
            let x0 = &xs[xi];
            if plan.refine_rounds == 0 {
                return (v0, x0.clone(), basis * c0);
            }
            let mut start: Vec<f64> = x0.iter().copied().collect();
            start.extend(c0.iter().copied());
            let mut steps = vec![plan.spacing(n); n];
            steps.extend(std::iter::repeat_n(0.25 * c0.norm().max(1e-3), d));
            let mut clamp = vec![Some(plan.box_radius); n];
            clamp.extend(std::iter::repeat_n(None, d));
            let split = |p: &[f64]| (DVector::from_column_slice(&p[..n]), basis * DVector::from_column_slice(&p[n..]));
            let (p, v) = pattern_search(start, v0, steps, &clamp, plan.refine_rounds, |p| {
                let (x, z) = split(p);
                linearization_ratio(f, t, &x, &z)
            });
            let (x, z) = split(&p);
            (v, x, z)
        })
        .collect();
    let mut best = results[0].clone();
    for r in results.into_iter().skip(1) {
        if r.0 > best.0 {
            best = r;
        }
    }
    best
}

/// `(D, β)` of the sparse Riesz lower bound from `δ_{2A}(T)` and `γ_{F,T}(2A)`.
///
/// Needs `√δ + γ < √2/2`; otherwise fails with the (negative) margin.
pub fn sparse_riesz_constants(delta2: f64, gamma2: f64) -> Result<(f64, f64)> {
    if !(delta2 >= 0.0 && gamma2 >= 0.0) {
        return Err(Error::invalid("delta and gamma must be nonnegative"));
    }
    let s = delta2.sqrt() + gamma2;
    let margin = std::f64::consts::FRAC_1_SQRT_2 - s;
    if margin <= 0.0 {
        return Err(Error::CertificateFailed {
            condition: "sqrt(delta_2A) + gamma_2A < sqrt(2)/2".into(),
            margin,
        });
    }
    let d = 1.0 / (1.0 - std::f64::consts::SQRT_2 * s);
    Ok((d, d * s))
}

/// `(γ₁, γ₂) = (2γ(4A), 2(γ(2A) + γ(4A)))`.
pub fn almost_linear_constants(gamma2: f64, gamma4: f64) -> Result<(f64, f64)> {
    if !(gamma2 >= 0.0 && gamma4 >= 0.0 && gamma4.is_finite()) {
        return Err(Error::invalid("gamma values must be finite and nonnegative"));
    }
    Ok((2.0 * gamma4, 2.0 * (gamma2 + gamma4)))
}

/// `γ₃ = 1 − 2Dγ₁ − (Dγ₁ + Dγ₂ + β)√(a_A s_A)`; positive means the
/// recovery error bounds apply.
pub fn recovery_condition(d: f64, beta: f64, gamma1: f64, gamma2: f64, a_a: f64, s_a: f64) -> Result<f64> {
    if !(d > 0.0) || [beta, gamma1, gamma2, a_a, s_a].iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::invalid("recovery constants must be nonnegative with D > 0"));
    }
    Ok(1.0 - 2.0 * d * gamma1 - (d * gamma1 + d * gamma2 + beta) * (a_a * s_a).sqrt())
}
