use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, SQRT_2};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::spec::{MapKind, MapSpec, OperatorSource};
use super::{DifferentiableMap, KnownConstant};
use crate::error::{Error, Result};
use crate::report::Provenance;
use crate::spaces::{DenseOperator, NormSpec};

fn known(name: &str, value: f64, provenance: Provenance, note: &str) -> KnownConstant {
    KnownConstant {
        name: name.to_string(),
        value,
        provenance,
        note: note.to_string(),
    }
}

/// Linear map `F = T`.
#[derive(Debug, Clone)]
pub struct LinearMap {
    t: DenseOperator,
}

impl LinearMap {
    pub fn new(t: DenseOperator) -> Self {
        Self { t }
    }
}

impl DifferentiableMap for LinearMap {
    fn in_dim(&self) -> usize {
        self.t.cols()
    }
    fn out_dim(&self) -> usize {
        self.t.rows()
    }
    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        self.t.apply(x)
    }
    fn jacobian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(self.t.matrix().clone())
    }
    fn zero_normalized(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        format!("linear({}x{})", self.t.rows(), self.t.cols())
    }
    fn is_linear(&self) -> bool {
        true
    }
    fn reference_operator(&self) -> Option<DenseOperator> {
        Some(self.t.clone())
    }
    fn known_constants(&self) -> Vec<KnownConstant> {
        let mut v = vec![
            known("beta", 0.0, Provenance::Exact, "against T itself"),
            known("delta", 0.0, Provenance::Exact, "against T itself"),
            known("theta", 0.0, Provenance::Exact, "against T itself"),
            known("alpha", 0.0, Provenance::Exact, "constant derivative"),
            known("stability_upper", self.t.sigma_max(), Provenance::Exact, "largest singular value"),
        ];
        if self.t.rows() >= self.t.cols() {
            v.push(known("stability_lower", self.t.sigma_min(), Provenance::Exact, "smallest singular value"));
        }
        v
    }
}

/// The three-branch curve `ℝ → ℝ²`: a circular arc of angle `π + 2ε`
/// continued by its two tangent rays.
#[derive(Debug, Clone, Copy)]
pub struct EMap {
    p: f64,
    eps: f64,
}

/// Builds the curve with output norm ℓp and opening `eps ∈ [0, π/4)`.
pub fn e_map(p: f64, eps: f64) -> Result<EMap> {
    if !(0.0..FRAC_PI_4).contains(&eps) {
        return Err(Error::invalid(format!("eps must lie in [0, pi/4), got {eps}")));
    }
    NormSpec::lp(p)?;
    Ok(EMap { p, eps })
}

impl EMap {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn seam(&self) -> f64 {
        FRAC_PI_2 + self.eps
    }

    fn point(&self, t: f64) -> [f64; 2] {
        let (se, ce) = self.eps.sin_cos();
        let c = self.seam();
        if t < -c {
            let s = t + c;
            [-ce - se * s, se - ce * s]
        } else if t > c {
            let s = t - c;
            [ce - se * s, se + ce * s]
        } else {
            [t.sin(), -t.cos()]
        }
    }

    fn tangent(&self, t: f64) -> [f64; 2] {
        let (se, ce) = self.eps.sin_cos();
        let c = self.seam();
        if t < -c {
            [-se, -ce]
        } else if t > c {
            [-se, ce]
        } else {
            [t.cos(), t.sin()]
        }
    }

    /// `min` and `max` of `‖(cos φ, sin φ)‖_p` over all angles.
    fn lp_circle_range(p: f64) -> (f64, f64) {
        let r = if p.is_infinite() {
            std::f64::consts::FRAC_1_SQRT_2
        } else {
            2f64.powf(1.0 / p - 0.5)
        };
        (r.min(1.0), r.max(1.0))
    }

    /// Reference operator `t ↦ (t, 0)`.
    pub fn t1() -> DenseOperator {
        DenseOperator::from_row_slice(2, 1, &[1.0, 0.0]).expect("valid")
    }
}

impl DifferentiableMap for EMap {
    fn in_dim(&self) -> usize {
        1
    }
    fn out_dim(&self) -> usize {
        2
    }
    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_row_slice(&self.point(x[0]))
    }
    fn jacobian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_column_slice(2, 1, &self.tangent(x[0])))
    }
    fn zero_normalized(&self) -> bool {
        false
    }
    fn name(&self) -> String {
        let p = if self.p.is_infinite() { "inf".to_string() } else { self.p.to_string() };
        format!("e_map(p={p},eps={})", self.eps)
    }
    fn output_norm(&self) -> NormSpec {
        NormSpec::lp(self.p).expect("validated at construction")
    }
    fn reference_operator(&self) -> Option<DenseOperator> {
        Some(Self::t1())
    }
    fn known_constants(&self) -> Vec<KnownConstant> {
        // every tangent is a Euclidean unit vector and the tangent angles sweep
        // an interval containing [-π/2, π/2], so the ℓp range is the circle's
        let (lo, hi) = Self::lp_circle_range(self.p);
        let mut v = vec![
            known("stability_lower", lo, Provenance::Exact, "min of the lp norm over unit tangents"),
            known("stability_upper", hi, Provenance::Exact, "max of the lp norm over unit tangents"),
        ];
        if self.p == 2.0 {
            let angle = FRAC_PI_2 + self.eps;
            v.push(known("theta", angle, Provenance::Exact, "against t -> (t, 0)"));
            v.push(known("beta", 2.0 * (angle / 2.0).sin(), Provenance::Exact, "against t -> (t, 0)"));
            if self.eps == 0.0 {
                v.push(known("alpha", SQRT_2, Provenance::Exact, "half circle of tangents"));
            }
        }
        if self.eps == 0.0 && self.p.is_infinite() {
            v.push(known("alpha", 1.0, Provenance::Exact, "attained at z = (1, 0)"));
        }
        if self.eps == 0.0 && self.p == 1.0 {
            v.push(known("alpha", 2.0, Provenance::Exact, "tangents (0, 1) and (0, -1)"));
        }
        v
    }
}

/// Componentwise smooth nonlinearity with `g(0) = 0` and `g'(0) = 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smooth {
    #[default]
    Sin,
    Tanh,
}

impl Smooth {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Smooth::Sin => t.sin(),
            Smooth::Tanh => t.tanh(),
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match self {
            Smooth::Sin => t.cos(),
            Smooth::Tanh => 1.0 - t.tanh().powi(2),
        }
    }

    /// `sup |g'|`.
    pub fn lipschitz(&self) -> f64 {
        1.0
    }
}

/// `F(x) = Tx + η·g(Tx)`, a smooth perturbation of a linear operator.
#[derive(Debug, Clone)]
pub struct PerturbedLinear {
    t: DenseOperator,
    eta: f64,
    g: Smooth,
}

pub fn perturbed_linear(t: DenseOperator, eta: f64, g: Smooth) -> Result<PerturbedLinear> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("eta must be finite and nonnegative, got {eta}")));
    }
    Ok(PerturbedLinear { t, eta, g })
}

impl PerturbedLinear {
    pub fn operator(&self) -> &DenseOperator {
        &self.t
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn smooth(&self) -> Smooth {
        self.g
    }
}

impl DifferentiableMap for PerturbedLinear {
    fn in_dim(&self) -> usize {
        self.t.cols()
    }
    fn out_dim(&self) -> usize {
        self.t.rows()
    }
    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let tx = self.t.apply(x);
        let g = tx.map(|v| self.g.value(v));
        tx + g * self.eta
    }
    fn jacobian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let tx = self.t.apply(x);
        let mut j = self.t.matrix().clone();
        for (i, v) in tx.iter().enumerate() {
            let s = 1.0 + self.eta * self.g.deriv(*v);
            j.row_mut(i).scale_mut(s);
        }
        Some(j)
    }
    fn zero_normalized(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        format!("perturbed_linear({}x{},eta={},{:?})", self.t.rows(), self.t.cols(), self.eta, self.g)
    }
    fn is_linear(&self) -> bool {
        self.eta == 0.0
    }
    fn reference_operator(&self) -> Option<DenseOperator> {
        Some(self.t.clone())
    }
    fn known_constants(&self) -> Vec<KnownConstant> {
        // at x = 0 the derivative is (1 + η)T, and |g'| ≤ 1 everywhere
        let mut v = vec![known("delta", self.eta * self.g.lipschitz(), Provenance::Exact, "attained at x = 0")];
        if self.t.rows() == 1 && self.t.cols() == 1 {
            v.push(known("beta", 0.0, Provenance::Exact, "one-dimensional, derivative keeps its sign"));
            v.push(known("theta", 0.0, Provenance::Exact, "one-dimensional, derivative keeps its sign"));
            let a = self.t.matrix()[(0, 0)].abs();
            let lo = match self.g {
                Smooth::Sin => 1.0 - self.eta,
                Smooth::Tanh => 1.0,
            };
            v.push(known("stability_lower", a * lo, Provenance::Exact, "infimum of |F'|"));
            v.push(known("stability_upper", a * (1.0 + self.eta), Provenance::Exact, "attained at x = 0"));
        }
        v
    }
}

/// Scalar companding nonlinearity with `f(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScalarFn {
    Identity,
    /// `t + c·t³`
    Cubic { c: f64 },
    /// `tanh(a·t)/a`
    Tanh { a: f64 },
}

impl ScalarFn {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            ScalarFn::Identity => t,
            ScalarFn::Cubic { c } => t + c * t * t * t,
            ScalarFn::Tanh { a } => (a * t).tanh() / a,
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match *self {
            ScalarFn::Identity => 1.0,
            ScalarFn::Cubic { c } => 1.0 + 3.0 * c * t * t,
            ScalarFn::Tanh { a } => 1.0 - (a * t).tanh().powi(2),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ScalarFn::Cubic { c } if !c.is_finite() => Err(Error::invalid("cubic coefficient must be finite")),
            ScalarFn::Tanh { a } if !(a.is_finite() && a > 0.0) => Err(Error::invalid("tanh scale must be positive")),
            _ => Ok(()),
        }
    }
}

/// Companding sampler `S(x) = Ψ f(Φᵀx)`: synthesize a signal on `L` grid
/// points from `n` impulse responses (rows of Φ), compand it pointwise, and
/// correlate it against `m` sampling functionals (rows of Ψ).
#[derive(Debug, Clone)]
pub struct CompandingMap {
    phi: DMatrix<f64>,
    psi: DMatrix<f64>,
    f: ScalarFn,
    displayed: DMatrix<f64>,
}

/// Result of [`companding_map`].
#[derive(Debug, Clone)]
pub struct CompandingParts {
    pub map: CompandingMap,
    /// `m×n` operator comparable with `S'(x)`.
    pub surrogate: DenseOperator,
    pub gram_condition: f64,
    pub inner_condition: f64,
}

const MAX_CONDITION: f64 = 1e8;

fn condition(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let lo = sv.min();
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        sv.max() / lo
    }
}

/// Builds the sampler and the linear surrogate
/// `A_ΦΦ (A_ΦΨ A_ΨΨ⁻¹ A_ΨΦ)⁻¹ A_ΦΨ A_ΨΨ⁻¹` (an `n×m` matrix, returned
/// transposed so that it maps ℝⁿ to ℝᵐ like `S`), with `A_ΦΨ = ΦΨᵀ`.
pub fn companding_map(phi: DMatrix<f64>, psi: DMatrix<f64>, f: ScalarFn) -> Result<CompandingParts> {
    f.validate()?;
    if phi.ncols() != psi.ncols() || phi.is_empty() || psi.is_empty() {
        return Err(Error::invalid(format!(
            "phi ({}x{}) and psi ({}x{}) must share a nonzero column count",
            phi.nrows(),
            phi.ncols(),
            psi.nrows(),
            psi.ncols()
        )));
    }
    let a_pp = &phi * phi.transpose();
    let a_ps = &phi * psi.transpose();
    let a_ss = &psi * psi.transpose();
    let gram_condition = condition(&a_ss);
    if gram_condition >= MAX_CONDITION {
        return Err(Error::invalid(format!("psi Gram matrix is singular (condition {gram_condition:.3e})")));
    }
    let a_ss_inv = a_ss.try_inverse().ok_or_else(|| Error::invalid("psi Gram matrix is singular"))?;
    let inner = &a_ps * &a_ss_inv * a_ps.transpose();
    let inner_condition = condition(&inner);
    if inner_condition >= MAX_CONDITION {
        return Err(Error::invalid(format!(
            "inner Gram product is singular (condition {inner_condition:.3e})"
        )));
    }
    let inner_inv = inner.try_inverse().ok_or_else(|| Error::invalid("inner Gram product is singular"))?;
    let displayed = a_pp * inner_inv * a_ps * a_ss_inv;
    let surrogate = DenseOperator::new(displayed.transpose())?;
    Ok(CompandingParts {
        map: CompandingMap { phi, psi, f, displayed },
        surrogate,
        gram_condition,
        inner_condition,
    })
}

impl CompandingMap {
    /// The `n×m` operator in its original orientation.
    pub fn displayed_operator(&self) -> &DMatrix<f64> {
        &self.displayed
    }

    pub fn grid_len(&self) -> usize {
        self.phi.ncols()
    }
}

impl DifferentiableMap for CompandingMap {
    fn in_dim(&self) -> usize {
        self.phi.nrows()
    }
    fn out_dim(&self) -> usize {
        self.psi.nrows()
    }
    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let h = self.phi.tr_mul(x);
        &self.psi * h.map(|v| self.f.value(v))
    }
    fn jacobian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let h = self.phi.tr_mul(x);
        let mut scaled = self.psi.clone();
        for (j, v) in h.iter().enumerate() {
            scaled.column_mut(j).scale_mut(self.f.deriv(*v));
        }
        Some(scaled * self.phi.transpose())
    }
    fn zero_normalized(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        format!("companding(n={},m={},L={},{:?})", self.in_dim(), self.out_dim(), self.grid_len(), self.f)
    }
    fn is_linear(&self) -> bool {
        self.f == ScalarFn::Identity
    }
    fn reference_operator(&self) -> Option<DenseOperator> {
        DenseOperator::new(self.displayed.transpose()).ok()
    }
}

type EvalFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type JacFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;

/// Map built from closures.
#[derive(Clone)]
pub struct FnMap {
    name: String,
    in_dim: usize,
    out_dim: usize,
    eval: Arc<EvalFn>,
    jac: Option<Arc<JacFn>>,
    zero_normalized: bool,
}

impl FnMap {
    pub fn new(
        name: impl Into<String>,
        in_dim: usize,
        out_dim: usize,
        eval: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        let eval: Arc<EvalFn> = Arc::new(eval);
        let zero_normalized = eval(&DVector::zeros(in_dim)).norm() <= 1e-12;
        Self {
            name: name.into(),
            in_dim,
            out_dim,
            eval,
            jac: None,
            zero_normalized,
        }
    }

    pub fn with_jacobian(
        mut self,
        jac: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.jac = Some(Arc::new(jac));
        self
    }
}

impl std::fmt::Debug for FnMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FnMap({})", self.name)
    }
}

impl DifferentiableMap for FnMap {
    fn in_dim(&self) -> usize {
        self.in_dim
    }
    fn out_dim(&self) -> usize {
        self.out_dim
    }
    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.eval)(x)
    }
    fn jacobian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.jac.as_ref().map(|j| j(x))
    }
    fn zero_normalized(&self) -> bool {
        self.zero_normalized
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

/// A named, reproducible map instance.
#[derive(Debug, Clone)]
pub struct MapCatalogEntry {
    pub name: String,
    pub spec: MapSpec,
}

impl MapCatalogEntry {
    /// Builds the map and its reference operator (seed 0, no files).
    pub fn build(&self) -> Result<(Arc<dyn DifferentiableMap>, DenseOperator)> {
        let built = self.spec.build(0, std::path::Path::new("."))?;
        let t = built
            .operator
            .ok_or_else(|| Error::invalid(format!("{} has no reference operator", self.name)))?;
        Ok((built.map, t))
    }

    pub fn constants(&self) -> Result<Vec<KnownConstant>> {
        Ok(self.spec.build(0, std::path::Path::new("."))?.map.known_constants())
    }
}

/// Standard instances used by examples and tests.
pub fn catalog() -> Vec<MapCatalogEntry> {
    let mut out = Vec::new();
    for p in [1.0, 2.0, f64::INFINITY] {
        for eps in [0.0, FRAC_PI_6] {
            let map = e_map(p, eps).expect("valid");
            out.push(MapCatalogEntry {
                name: map.name(),
                spec: MapSpec::new(MapKind::EMap { p, eps }),
            });
        }
    }
    out.push(MapCatalogEntry {
        name: "scalar_sin".into(),
        spec: MapSpec::new(MapKind::PerturbedLinear {
            operator: OperatorSource::Identity { n: 1 },
            eta: 0.1,
            g: Smooth::Sin,
        }),
    });
    out.push(MapCatalogEntry {
        name: "tanh_4".into(),
        spec: MapSpec::new(MapKind::PerturbedLinear {
            operator: OperatorSource::random(4, 4, 7),
            eta: 0.05,
            g: Smooth::Tanh,
        }),
    });
    out.push(MapCatalogEntry {
        name: "companding_3x4".into(),
        spec: MapSpec::new(MapKind::Companding {
            phi: OperatorSource::random(3, 8, 21),
            psi: OperatorSource::random(4, 8, 22),
            f: ScalarFn::Cubic { c: 0.01 },
        }),
    });
    out.push(MapCatalogEntry {
        name: "linear_3x2".into(),
        spec: MapSpec::new(MapKind::Linear {
            operator: OperatorSource::random(3, 2, 5),
        }),
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{fd_jacobian, jacobian_fd_error};
    use crate::rng::stream;
    use rand::Rng;
    use std::f64::consts::PI;

    fn s(t: f64) -> DVector<f64> {
        DVector::from_element(1, t)
    }

    #[test]
    fn e_map_values() {
        let e = e_map(2.0, 0.0).unwrap();
        let v = e.eval(&s(0.0));
        assert!((v[0] - 0.0).abs() < 1e-15 && (v[1] + 1.0).abs() < 1e-15);
        let v = e.eval(&s(FRAC_PI_2));
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1].abs() < 1e-15);
        let v = e.eval(&s(PI));
        assert!((v[0] - 1.0).abs() < 1e-15 && (v[1] - FRAC_PI_2).abs() < 1e-15);
        assert!(e_map(2.0, FRAC_PI_4).is_err());
        assert!(e_map(2.0, -0.1).is_err());
        assert!(e_map(0.5, 0.0).is_err());
    }

    #[test]
    fn e_map_is_c1_across_seams() {
        for eps in [0.0, FRAC_PI_6, 0.7] {
            let e = e_map(2.0, eps).unwrap();
            for c in [FRAC_PI_2 + eps, -(FRAC_PI_2 + eps)] {
                let h = 1e-7;
                let left = (e.eval(&s(c)) - e.eval(&s(c - h))) / h;
                let right = (e.eval(&s(c + h)) - e.eval(&s(c))) / h;
                assert!((left - &right).norm() < 1e-6, "eps {eps} seam {c}");
                let jl = e.jacobian(&s(c - 1e-12)).unwrap();
                let jr = e.jacobian(&s(c + 1e-12)).unwrap();
                assert!((jl - jr).amax() < 1e-9);
            }
        }
    }

    #[test]
    fn e_map_stability_envelope() {
        let mut rng = stream(1, 1);
        for p in [1.0, 2.0, f64::INFINITY] {
            for eps in [0.0, FRAC_PI_6] {
                let e = e_map(p, eps).unwrap();
                let norm = e.output_norm();
                for _ in 0..10_000 {
                    let t: f64 = rng.random_range(-20.0..20.0);
                    let y: f64 = rng.random_range(-5.0..5.0);
                    if y == 0.0 {
                        continue;
                    }
                    let r = norm.norm(&(e.jacobian(&s(t)).unwrap() * y).column(0).into_owned()) / y.abs();
                    assert!(r >= SQRT_2 / 2.0 - 1e-9 && r <= 2.0 + 1e-9);
                }
            }
        }
    }

    #[test]
    fn e_map_is_not_bi_lipschitz() {
        let e = e_map(2.0, 0.0).unwrap();
        let t = 1000.0;
        let ratio = (e.eval(&s(t)) - e.eval(&s(-t))).norm() / (2.0 * t);
        assert!(ratio < 0.01);
    }

    #[test]
    fn perturbed_linear_scalar() {
        let f = perturbed_linear(DenseOperator::identity(1), 0.1, Smooth::Sin).unwrap();
        assert_eq!(f.eval(&s(0.0))[0], 0.0);
        for i in 0..=100 {
            let x = -10.0 + 0.2 * i as f64;
            let d = f.jacobian(&s(x)).unwrap()[(0, 0)];
            assert!((d - (1.0 + 0.1 * x.cos())).abs() < 1e-15);
            assert!((0.9..=1.1).contains(&d));
        }
        let zero = perturbed_linear(DenseOperator::identity(3), 0.0, Smooth::Tanh).unwrap();
        assert!(zero.is_linear());
        let x = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        assert_eq!(zero.eval(&x), x);
        assert!(perturbed_linear(DenseOperator::identity(1), -1.0, Smooth::Sin).is_err());
    }

    #[test]
    fn companding_identity_case() {
        let parts = companding_map(DMatrix::identity(3, 3), DMatrix::identity(3, 3), ScalarFn::Identity).unwrap();
        assert!((parts.surrogate.matrix() - DMatrix::identity(3, 3)).amax() < 1e-12);
        let x = DVector::from_vec(vec![1.0, 2.0, -3.0]);
        assert!((parts.map.eval(&x) - &x).norm() < 1e-14);
    }

    #[test]
    fn companding_linear_consistency() {
        let phi = crate::rng::gaussian_matrix(21, 3, 8);
        let psi = crate::rng::gaussian_matrix(22, 4, 8);
        let parts = companding_map(phi.clone(), psi.clone(), ScalarFn::Identity).unwrap();
        // displayed operator composed with the linear sampler gives ΦΦᵀ
        let s = &psi * phi.transpose();
        let prod = parts.map.displayed_operator() * &s;
        let target = &phi * phi.transpose();
        assert!((prod - &target).amax() < 1e-8 * target.amax());
        // hence ⟨S v, surrogate v⟩ = vᵀΦΦᵀv > 0
        let v = DVector::from_vec(vec![0.3, -1.0, 0.4]);
        let ip = (&s * &v).dot(&parts.surrogate.apply(&v));
        assert!((ip - v.dot(&(&target * &v))).abs() < 1e-8);
    }

    #[test]
    fn companding_cubic_instance() {
        let phi = crate::rng::gaussian_matrix(21, 3, 8);
        let psi = crate::rng::gaussian_matrix(22, 4, 8);
        let parts = companding_map(phi, psi, ScalarFn::Cubic { c: 0.01 }).unwrap();
        assert!(parts.map.zero_normalized());
        assert!(parts.map.eval(&DVector::zeros(3)).norm() <= 1e-12);
        let mut rng = stream(2, 2);
        for _ in 0..100 {
            let x = crate::rng::gaussian_vector(&mut rng, 3);
            assert!(jacobian_fd_error(&parts.map, &x).unwrap() < 1e-6);
        }
    }

    #[test]
    fn companding_rejects_singular_grams() {
        let phi = DMatrix::identity(3, 3);
        let psi = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        assert!(companding_map(phi.clone(), psi, ScalarFn::Identity).is_err());
        let psi2 = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        // n = 3 atoms cannot be resolved by 2 samples
        assert!(companding_map(phi, psi2, ScalarFn::Identity).is_err());
    }

    #[test]
    fn catalog_maps_are_consistent() {
        let mut rng = stream(3, 3);
        for entry in catalog() {
            let (f, t) = entry.build().unwrap();
            assert_eq!(t.cols(), f.in_dim(), "{}", entry.name);
            assert_eq!(t.rows(), f.out_dim(), "{}", entry.name);
            if f.zero_normalized() {
                assert!(f.eval(&DVector::zeros(f.in_dim())).norm() <= 1e-12);
            }
            for _ in 0..100 {
                let x = crate::rng::gaussian_vector(&mut rng, f.in_dim()) * 3.0;
                let err = jacobian_fd_error(f.as_ref(), &x).unwrap();
                assert!(err < 1e-6, "{}: {err}", entry.name);
            }
        }
    }

    #[test]
    fn fn_map_defaults_to_fd() {
        let f = FnMap::new("square", 2, 1, |x| DVector::from_element(1, x[0] * x[1]));
        assert!(f.zero_normalized());
        let x = DVector::from_vec(vec![2.0, 3.0]);
        let j = f.derivative(&x);
        assert!((j[(0, 0)] - 3.0).abs() < 1e-6 && (j[(0, 1)] - 2.0).abs() < 1e-6);
        let exact = f.clone().with_jacobian(|x| DMatrix::from_row_slice(1, 2, &[x[1], x[0]]));
        assert_eq!(exact.derivative(&x), DMatrix::from_row_slice(1, 2, &[3.0, 2.0]));
        let _ = fd_jacobian(&exact, &x, 1e-4).unwrap();
    }
}
