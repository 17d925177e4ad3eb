use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::triple::SparseTriple;
use crate::certify::SamplingPlan;
use crate::error::{Error, Result};
use crate::report::{Provenance, Quantity, Verdict};
use crate::rng::{gaussian_vector, stream};
use crate::spaces::{best_subspace, sum_union, NormKind, DEFAULT_ENUM_CAP};

fn check(x: &DVector<f64>, triple: &SparseTriple) -> Result<()> {
    if x.len() != triple.dim() {
        return Err(Error::invalid(format!("vector has dimension {}, triple lives in {}", x.len(), triple.dim())));
    }
    if !triple.has_minimizer() {
        return Err(Error::Unsupported("no best approximator is registered for non-coordinate unions".into()));
    }
    Ok(())
}

/// Keeps the `k` entries with the largest `w_i|x_i|`, lowest index first on ties.
fn keep_largest(x: &DVector<f64>, weights: Option<&[f64]>, k: usize) -> DVector<f64> {
    let n = x.len();
    let score = |i: usize| x[i].abs() * weights.map_or(1.0, |w| w[i]);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));
    let mut out = DVector::zeros(n);
    for &i in idx.iter().take(k.min(n)) {
        out[i] = x[i];
    }
    out
}

/// Weights that rank coordinates for an M norm over the sparse family.
/// Any ℓp norm is monotone and symmetric, so plain magnitudes work.
fn ranking_weights(triple: &SparseTriple) -> Option<Vec<f64>> {
    match triple.m_norm().kind() {
        NormKind::WeightedL1(w) => Some(w.clone()),
        NormKind::P(_) => None,
    }
}

/// `x_{A,M}`: a best M-norm approximation of `x` from the union.
pub fn best_approximator(x: &DVector<f64>, triple: &SparseTriple) -> Result<DVector<f64>> {
    check(x, triple)?;
    match triple.union().sparsity() {
        Some(s) => Ok(keep_largest(x, ranking_weights(triple).as_deref(), s)),
        None => Ok(best_subspace(x, triple.union(), triple.m_norm())?.1),
    }
}

/// `u_{A,M}`: the best approximator of `x − x_{A,M}`.
pub fn second_approximator(x: &DVector<f64>, triple: &SparseTriple) -> Result<DVector<f64>> {
    let first = best_approximator(x, triple)?;
    best_approximator(&(x - first), triple)
}

/// `σ_{A,M}(x) = ‖x − x_{A,M}‖_M`.
pub fn sigma_am(x: &DVector<f64>, triple: &SparseTriple) -> Result<f64> {
    Ok(triple.m(&(x - best_approximator(x, triple)?)))
}

/// `σ_{kA,M}(x)`; `k = 0` gives `‖x‖_M`.
pub fn sigma_kam(x: &DVector<f64>, triple: &SparseTriple, k: usize, cap: u128) -> Result<f64> {
    check(x, triple)?;
    if k == 0 {
        return Ok(triple.m(x));
    }
    let approx = match triple.union().sparsity() {
        Some(s) => keep_largest(x, ranking_weights(triple).as_deref(), (k * s).min(x.len())),
        None => best_subspace(x, &sum_union(triple.union(), k, cap)?, triple.m_norm())?.1,
    };
    Ok(triple.m(&(x - approx)))
}

/// `s_A = sup_{x∈A} (‖x‖_M/‖x‖_H)²`, exact for coordinate unions and sampled otherwise.
pub fn s_a(triple: &SparseTriple, plan: &SamplingPlan) -> Result<Quantity> {
    let u = triple.union();
    let scale = triple.m_norm().scale();
    if let Some(supports) = u.supports() {
        let per_support = |s: &Vec<usize>| -> f64 {
            match triple.m_norm().kind() {
                NormKind::WeightedL1(w) => s.iter().map(|&i| w[i] * w[i]).sum::<f64>() * scale * scale,
                NormKind::P(p) if *p <= 2.0 => (s.len() as f64).powf(2.0 / p - 1.0) * scale * scale,
                NormKind::P(_) => scale * scale,
            }
        };
        let v = match u.sparsity() {
            // the best support holds the s heaviest weights
            Some(s) => {
                let n = u.ambient_dim();
                let support: Vec<usize> = match triple.m_norm().kind() {
                    NormKind::WeightedL1(w) => {
                        let mut idx: Vec<usize> = (0..n).collect();
                        idx.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
                        idx.truncate(s);
                        idx
                    }
                    NormKind::P(_) => (0..s).collect(),
                };
                per_support(&support)
            }
            None => supports.iter().map(per_support).fold(0.0, f64::max),
        };
        return Ok(Quantity::exact(v));
    }
    plan.validate()?;
    let mut rng = stream(plan.seed, 0x5a00);
    let mut best: f64 = 0.0;
    for b in u.bases() {
        let k = b.ncols();
        for j in 0..k {
            best = best.max(triple.m(&b.column(j).into_owned()).powi(2));
        }
        for _ in 0..plan.n_dir {
            let c = gaussian_vector(&mut rng, k);
            let c = &c / c.norm();
            best = best.max(triple.m(&(b * c)).powi(2));
        }
    }
    Ok(Quantity::new(best, Provenance::SampledLowerBound))
}

/// Sampled sparse approximation ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AaReport {
    pub estimate: f64,
    pub provenance: Provenance,
    pub witness: Vec<f64>,
    pub n_samples: usize,
    /// Samples with `x_{A,M} = 0`, which carry no information.
    pub skipped: usize,
}

/// `(‖u_{A,M}‖_H / ‖x_{A,M}‖_M)²`, `None` when `x_{A,M} = 0`.
pub fn approximation_ratio(x: &DVector<f64>, triple: &SparseTriple) -> Result<Option<f64>> {
    let first = best_approximator(x, triple)?;
    let denom = triple.m(&first);
    if denom == 0.0 {
        return Ok(None);
    }
    let u = best_approximator(&(x - first), triple)?;
    Ok(Some((u.norm() / denom).powi(2)))
}

/// `a_A = sup_x (‖u_{A,M}‖_H/‖x_{A,M}‖_M)²` by sampling: box points,
/// Gaussian vectors, and flat vectors with `w_i|x_i|` constant on random
/// supports of every size, then a pattern search from the best three.
pub fn a_a(triple: &SparseTriple, plan: &SamplingPlan) -> Result<AaReport> {
    plan.validate()?;
    check(&DVector::zeros(triple.dim()), triple)?;
    let n = triple.dim();
    let weights = triple.l1_weights().unwrap_or_else(|| vec![1.0; n]);
    let mut cands: Vec<DVector<f64>> = plan.points(n);
    let mut rng = stream(plan.seed, 0xaa00);
    for _ in 0..plan.n_pts {
        cands.push(gaussian_vector(&mut rng, n));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    for k in 1..=n {
        for _ in 0..plan.n_dir.max(1) {
            idx.shuffle(&mut rng);
            let mut x = DVector::zeros(n);
            for &i in &idx[..k] {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                x[i] = sign / weights[i];
            }
            cands.push(x);
        }
    }
    let vals: Vec<Result<Option<f64>>> = cands.par_iter().map(|x| approximation_ratio(x, triple)).collect();
    let mut scored = Vec::with_capacity(vals.len());
    let mut skipped = 0;
    for (i, v) in vals.into_iter().enumerate() {
        match v? {
            Some(r) => scored.push((r, i)),
            None => skipped += 1,
        }
    }
    if scored.is_empty() {
        return Err(Error::invalid("every sample had a zero best approximator"));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut best = (scored[0].0, cands[scored[0].1].clone());
    for &(v0, i) in scored.iter().take(3) {
        let start: Vec<f64> = cands[i].iter().copied().collect();
        let steps: Vec<f64> = start.iter().map(|v| 0.25 * v.abs().max(0.1)).collect();
        let clamp = vec![None; n];
        let (x, v) = crate::certify::pattern_search(start, v0, steps, &clamp, plan.refine_rounds, |p| {
            approximation_ratio(&DVector::from_column_slice(p), triple).ok().flatten()
        });
        if v > best.0 {
            best = (v, DVector::from_vec(x));
        }
    }
    Ok(AaReport {
        estimate: best.0,
        provenance: Provenance::SampledLowerBound,
        witness: best.1.iter().copied().collect(),
        n_samples: cands.len(),
        skipped,
    })
}

/// `a_A` for the classical family is `1/s`; other triples are sampled.
pub fn a_a_value(triple: &SparseTriple, plan: &SamplingPlan) -> Result<Quantity> {
    if matches!(triple.kind(), super::TripleKind::Classical) {
        let s = triple.union().sparsity().expect("classical triples carry their sparsity");
        return Ok(Quantity::exact(1.0 / s as f64));
    }
    let r = a_a(triple, plan)?;
    Ok(Quantity::new(r.estimate, r.provenance))
}

/// Iterates of `x^{k+1} = x^k + argmin_{a∈A} ‖x − x^k − a‖_M` from `x⁰ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyTrace {
    /// `x^1, …, x^K`.
    pub iterates: Vec<Vec<f64>>,
    /// `‖x − x^k‖_M` for `k = 0..=K`.
    pub errors: Vec<f64>,
    /// `‖u_k‖_M = ‖x^{k+1} − x^k‖_M`.
    pub increments: Vec<f64>,
    /// `σ_{kA,M}(x)` for `k = 0..=K`, when `kA` is enumerable.
    pub sigma: Option<Vec<f64>>,
    /// Largest `|Σ_{j<k}‖u_j‖_M + ‖x − x^k‖_M − ‖x‖_M|` over `k`.
    pub telescoping_defect: f64,
}

impl GreedyTrace {
    /// `‖x − x^k‖_M / σ_{kA,M}(x)` where the denominator is positive.
    pub fn suboptimality(&self) -> Option<Vec<f64>> {
        let s = self.sigma.as_ref()?;
        Some(self.errors.iter().zip(s).filter(|(_, s)| **s > 0.0).map(|(e, s)| e / s).collect())
    }
}

pub fn greedy(x: &DVector<f64>, triple: &SparseTriple, steps: usize) -> Result<GreedyTrace> {
    check(x, triple)?;
    let total = triple.m(x);
    let mut xk = DVector::zeros(x.len());
    let mut iterates = Vec::with_capacity(steps);
    let mut errors = vec![total];
    let mut increments = Vec::with_capacity(steps);
    let mut defect: f64 = 0.0;
    let mut acc = 0.0;
    for _ in 0..steps {
        let u = best_approximator(&(x - &xk), triple)?;
        let inc = triple.m(&u);
        acc += inc;
        xk += u;
        let e = triple.m(&(x - &xk));
        defect = defect.max((acc + e - total).abs());
        increments.push(inc);
        errors.push(e);
        iterates.push(xk.iter().copied().collect());
    }
    let sigma = (0..=steps)
        .map(|k| sigma_kam(x, triple, k, DEFAULT_ENUM_CAP))
        .collect::<Result<Vec<_>>>()
        .ok();
    Ok(GreedyTrace { iterates, errors, increments, sigma, telescoping_defect: defect })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqrtApproxCheck {
    /// `‖x − x_{A,M}‖_H`.
    pub lhs: f64,
    /// `√a_A ‖x‖_M`.
    pub rhs: f64,
    pub pass: bool,
}

/// `‖x − x_{A,M}‖_H ≤ √a_A ‖x‖_M` (+1e-9).
pub fn sqrt_approx_check(x: &DVector<f64>, triple: &SparseTriple, a_a: f64) -> Result<SqrtApproxCheck> {
    let lhs = (x - best_approximator(x, triple)?).norm();
    let rhs = a_a.sqrt() * triple.m(x);
    Ok(SqrtApproxCheck { lhs, rhs, pass: lhs <= rhs + 1e-9 })
}

/// Checks the five triple axioms on sampled points.
///
/// Existence of best approximators is structural in finite dimension and
/// always passes. Density is checked through the greedy residual.
pub fn verify_axioms(triple: &SparseTriple, plan: &SamplingPlan) -> Result<Vec<Verdict>> {
    plan.validate()?;
    let n = triple.dim();
    let mut xs: Vec<DVector<f64>> = (0..n).map(|i| DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 })).collect();
    xs.extend(plan.points(n).into_iter().take(256));
    let mut rng = stream(plan.seed, 0xa1);
    for _ in 0..64 {
        xs.push(gaussian_vector(&mut rng, n));
    }

    let imbed = xs
        .iter()
        .filter(|x| x.norm() > 0.0)
        .map(|x| x.norm() / triple.m(x))
        .fold(0.0, f64::max);
    let mut out = vec![Verdict::below("imbedding_h_le_m", imbed, 1.0 + 1e-12)];
    out.push(
        Verdict::below("proximinality", 0.0, 1.0)
            .with_note("finite-dimensional subspaces: best approximators exist"),
    );

    if !triple.has_minimizer() {
        let note = "no registered M-norm minimizer for this union";
        out.push(Verdict { condition: "common_best_approximator".into(), value: f64::NAN, threshold: 1e-10, pass: false, note: Some(note.into()) });
        out.push(Verdict { condition: "norm_splitting".into(), value: f64::NAN, threshold: 1e-10, pass: false, note: Some(note.into()) });
        out.push(Verdict { condition: "sparse_density".into(), value: f64::NAN, threshold: 1e-12, pass: false, note: Some(note.into()) });
        return Ok(out);
    }

    let u = triple.union();
    let supports = u.supports().expect("coordinate union");
    let n_sub = supports.len().min(64);
    let mut common: f64 = 0.0;
    let mut split: f64 = 0.0;
    for x in &xs {
        let scale = triple.m(x).max(1.0);
        for (i, s) in supports.iter().enumerate().take(n_sub) {
            let b = u.basis(i);
            let h_min = b * (b.transpose() * x);
            let mut m_min = DVector::zeros(n);
            for &j in s {
                m_min[j] = x[j];
            }
            common = common.max((&h_min - &m_min).norm() / scale);
            // restriction must beat perturbations inside the subspace
            let base = triple.m(&(x - &m_min));
            for _ in 0..4 {
                let mut h = DVector::zeros(n);
                for &j in s {
                    h[j] = rng.random_range(-1.0..1.0) * 1e-3 * scale;
                }
                let v = base - triple.m(&(x - &m_min - h));
                common = common.max(v / scale);
            }
            let rest = x - &m_min;
            let m_gap = (triple.m(x) - triple.m(&m_min) - triple.m(&rest)).abs();
            let h_gap = (x.norm_squared() - m_min.norm_squared() - rest.norm_squared()).abs();
            split = split.max(m_gap / scale).max(h_gap / (scale * scale));
        }
    }
    out.push(Verdict::below("common_best_approximator", common, 1e-10));
    out.push(Verdict::below("norm_splitting", split, 1e-10));

    let steps = n / u.max_dim().max(1) + 1;
    let mut density: f64 = 0.0;
    for x in &xs {
        let g = greedy(x, triple, steps)?;
        let m = triple.m(x);
        if m > 0.0 {
            density = density.max(g.errors[steps] / m);
        }
    }
    out.push(Verdict::below("sparse_density", density, 1e-12));
    Ok(out)
}
