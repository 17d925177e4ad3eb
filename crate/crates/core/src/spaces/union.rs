use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spaces::{binomial, NormSpec};

/// Default cap on the number of subspaces any enumeration may visit.
pub const DEFAULT_ENUM_CAP: u128 = 2_000_000;

const ORTHO_TOL: f64 = 1e-12;
const SPAN_TOL: f64 = 1e-10;

/// A finite union of linear subspaces of ℝⁿ, each stored as an orthonormal basis.
///
/// Coordinate unions (every subspace spanned by standard basis vectors) also
/// keep their supports, which enables exact minimization in non-Euclidean norms.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceUnion {
    ambient_dim: usize,
    bases: Vec<DMatrix<f64>>,
    supports: Option<Vec<Vec<usize>>>,
    /// `Some(s)` when the union is every `s`-element coordinate support.
    sparsity: Option<usize>,
}

impl SubspaceUnion {
    /// Union from bases with orthonormal columns.
    pub fn new(ambient_dim: usize, bases: Vec<DMatrix<f64>>) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::invalid("ambient dimension must be positive"));
        }
        if bases.is_empty() {
            return Err(Error::invalid("a union needs at least one subspace"));
        }
        for (i, b) in bases.iter().enumerate() {
            if b.nrows() != ambient_dim {
                return Err(Error::invalid(format!(
                    "basis {i} has {} rows, ambient dimension is {ambient_dim}",
                    b.nrows()
                )));
            }
            if b.ncols() == 0 || b.ncols() > ambient_dim {
                return Err(Error::invalid(format!("basis {i} has invalid dimension {}", b.ncols())));
            }
            let gram = b.transpose() * b - DMatrix::identity(b.ncols(), b.ncols());
            if gram.abs().max() > ORTHO_TOL {
                return Err(Error::invalid(format!("basis {i} is not orthonormal")));
            }
        }
        Ok(Self { ambient_dim, bases, supports: None, sparsity: None })
    }

    /// Union of the spans of arbitrary spanning sets (orthonormalized here).
    pub fn from_spans(ambient_dim: usize, spans: Vec<DMatrix<f64>>) -> Result<Self> {
        let bases = spans
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                if s.nrows() != ambient_dim {
                    return Err(Error::invalid(format!("span {i} has wrong row count")));
                }
                orthonormalize(&s).ok_or_else(|| Error::invalid(format!("span {i} is the zero space")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(ambient_dim, bases)
    }

    /// Coordinate union with the given supports.
    pub fn coordinate(ambient_dim: usize, supports: Vec<Vec<usize>>) -> Result<Self> {
        if supports.is_empty() {
            return Err(Error::invalid("a union needs at least one subspace"));
        }
        let mut clean = Vec::with_capacity(supports.len());
        for s in supports {
            let set: BTreeSet<usize> = s.iter().copied().collect();
            if set.is_empty() || set.len() != s.len() {
                return Err(Error::invalid("supports must be non-empty without repeats"));
            }
            if set.iter().any(|&j| j >= ambient_dim) {
                return Err(Error::invalid("support index out of range"));
            }
            clean.push(set.into_iter().collect::<Vec<_>>());
        }
        let bases = clean.iter().map(|s| coordinate_basis(ambient_dim, s)).collect();
        Ok(Self { ambient_dim, bases, supports: Some(clean), sparsity: None })
    }

    /// All `s`-sparse coordinate subspaces of ℝⁿ, supports in lexicographic order.
    pub fn sparse(n: usize, s: usize) -> Result<Self> {
        Self::sparse_capped(n, s, DEFAULT_ENUM_CAP)
    }

    pub fn sparse_capped(n: usize, s: usize, cap: u128) -> Result<Self> {
        if s == 0 || s > n {
            return Err(Error::invalid(format!("sparsity {s} must lie in 1..={n}")));
        }
        let count = binomial(n as u64, s as u64);
        if count > cap {
            return Err(Error::ResourceLimit {
                what: format!("{s}-sparse supports in dimension {n}"),
                required: count,
                cap,
            });
        }
        let supports = combinations(n, s);
        let mut u = Self::coordinate(n, supports)?;
        u.sparsity = Some(s);
        Ok(u)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn basis(&self, i: usize) -> &DMatrix<f64> {
        &self.bases[i]
    }

    pub fn bases(&self) -> &[DMatrix<f64>] {
        &self.bases
    }

    pub fn supports(&self) -> Option<&[Vec<usize>]> {
        self.supports.as_deref()
    }

    pub fn is_coordinate(&self) -> bool {
        self.supports.is_some()
    }

    /// `Some(s)` for the full `s`-sparse coordinate family.
    pub fn sparsity(&self) -> Option<usize> {
        self.sparsity
    }

    /// Largest subspace dimension.
    pub fn max_dim(&self) -> usize {
        self.bases.iter().map(|b| b.ncols()).max().unwrap_or(0)
    }

    /// Whether `x` lies in one of the subspaces (relative residual below `tol`).
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        let scale = x.norm().max(1.0);
        self.bases
            .iter()
            .any(|b| (x - b * (b.transpose() * x)).norm() <= tol * scale)
    }
}

pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn coordinate_basis(n: usize, support: &[usize]) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(n, support.len());
    for (c, &j) in support.iter().enumerate() {
        b[(j, c)] = 1.0;
    }
    b
}

/// Orthonormal basis for the column span, `None` for the zero space.
fn orthonormalize(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if m.ncols() == 0 {
        return None;
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref()?;
    let smax = svd.singular_values.max();
    if smax <= 0.0 {
        return None;
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > SPAN_TOL * smax.max(1.0))
        .collect();
    if keep.is_empty() {
        return None;
    }
    Some(u.select_columns(&keep))
}

fn check_dim(x: &DVector<f64>, n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::invalid(format!(
            "vector has dimension {}, expected {n}",
            x.len()
        )));
    }
    Ok(())
}

/// Orthogonal projection `B Bᵀ x` onto the span of an orthonormal basis.
pub fn project(x: &DVector<f64>, basis: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_dim(x, basis.nrows())?;
    Ok(basis * (basis.transpose() * x))
}

/// Closest point of the union to `x` in the given norm.
///
/// Euclidean norms work for any union. Other norms need a coordinate union,
/// where the minimizer over a subspace is the restriction of `x` to its
/// support. Ties go to the lowest subspace index.
pub fn best_subspace(
    x: &DVector<f64>,
    u: &SubspaceUnion,
    norm: &NormSpec,
) -> Result<(usize, DVector<f64>)> {
    if u.is_empty() {
        return Err(Error::invalid("empty union"));
    }
    check_dim(x, u.ambient_dim)?;
    norm.check_dim(u.ambient_dim)?;
    let mut best: Option<(usize, f64, DVector<f64>)> = None;
    if let Some(supports) = u.supports() {
        for (i, s) in supports.iter().enumerate() {
            let mut resid = x.clone();
            for &j in s {
                resid[j] = 0.0;
            }
            let d = norm.norm(&resid);
            if best.as_ref().is_none_or(|b| d < b.1) {
                best = Some((i, d, x - resid));
            }
        }
    } else if matches!(norm.kind(), crate::spaces::NormKind::P(p) if *p == 2.0) {
        for (i, b) in u.bases.iter().enumerate() {
            let p = b * (b.transpose() * x);
            let d = (x - &p).norm();
            if best.as_ref().is_none_or(|bb| d < bb.1) {
                best = Some((i, d, p));
            }
        }
    } else {
        return Err(Error::Unsupported(format!(
            "minimization in norm {norm} over non-coordinate subspaces"
        )));
    }
    let (i, _, p) = best.expect("non-empty union");
    Ok((i, p))
}

/// The union `kA = A + … + A` (k summands), deduplicated with contained
/// subspaces absorbed into larger ones.
pub fn sum_union(u: &SubspaceUnion, k: usize, cap: u128) -> Result<SubspaceUnion> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if k == 1 {
        return Ok(u.clone());
    }
    let n = u.ambient_dim;
    if let Some(s) = u.sparsity {
        return SubspaceUnion::sparse_capped(n, (k * s).min(n), cap);
    }
    let count = binomial((u.len() + k - 1) as u64, k as u64);
    if count > cap {
        return Err(Error::ResourceLimit {
            what: format!("{k}-fold sums of {} subspaces", u.len()),
            required: count,
            cap,
        });
    }
    let multisets = multisets(u.len(), k);
    if let Some(supports) = u.supports() {
        let mut sets: BTreeSet<Vec<usize>> = BTreeSet::new();
        for m in &multisets {
            let s: BTreeSet<usize> = m.iter().flat_map(|&i| supports[i].iter().copied()).collect();
            sets.insert(s.into_iter().collect());
        }
        let all: Vec<Vec<usize>> = sets.into_iter().collect();
        let maximal: Vec<Vec<usize>> = all
            .iter()
            .filter(|a| {
                !all.iter()
                    .any(|b| b.len() > a.len() && a.iter().all(|j| b.binary_search(j).is_ok()))
            })
            .cloned()
            .collect();
        let mut out = SubspaceUnion::coordinate(n, maximal)?;
        if out.supports().unwrap().len() == 1 && out.supports().unwrap()[0].len() == n {
            out.sparsity = Some(n);
        }
        return Ok(out);
    }
    let mut bases: Vec<DMatrix<f64>> = Vec::new();
    for m in &multisets {
        let cols: Vec<_> = m.iter().flat_map(|&i| u.bases[i].column_iter()).collect();
        let cat = DMatrix::from_columns(&cols);
        if let Some(b) = orthonormalize(&cat) {
            bases.push(b);
        }
    }
    // keep a subspace only if no other one strictly contains it, or an equal one came first
    let keep: Vec<bool> = (0..bases.len())
        .map(|i| {
            !bases.iter().enumerate().any(|(j, other)| {
                j != i
                    && contains_span(other, &bases[i])
                    && (other.ncols() > bases[i].ncols() || j < i)
            })
        })
        .collect();
    let bases = bases
        .into_iter()
        .zip(keep)
        .filter_map(|(b, k)| k.then_some(b))
        .collect();
    SubspaceUnion::new(n, bases)
}

/// Whether span(inner) ⊆ span(outer), both orthonormal.
pub(crate) fn contains_span(outer: &DMatrix<f64>, inner: &DMatrix<f64>) -> bool {
    if inner.ncols() > outer.ncols() {
        return false;
    }
    let resid = inner - outer * (outer.transpose() * inner);
    resid.abs().max() < SPAN_TOL
}

fn multisets(len: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, len: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..len {
            cur.push(i);
            rec(i, len, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, len, k, &mut Vec::with_capacity(k), &mut out);
    out
}
