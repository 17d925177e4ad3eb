//! Differentiable maps `F: ℝⁿ → ℝᵐ` and the instances used throughout the crate.

mod catalog;
mod spec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::Provenance;
use crate::spaces::{DenseOperator, NormSpec};

pub use catalog::{
    catalog, companding_map, e_map, perturbed_linear, CompandingMap, CompandingParts, EMap, FnMap,
    LinearMap, MapCatalogEntry, PerturbedLinear, ScalarFn, Smooth,
};
pub use spec::{BuiltMap, MapKind, MapSpec, OperatorDist, OperatorSource};

/// A constant known in closed form for a particular map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownConstant {
    pub name: String,
    pub value: f64,
    pub provenance: Provenance,
    pub note: String,
}

/// A map with evaluation and (optionally analytic) derivative.
///
/// Implementations must be pure: `eval` and `jacobian` may be called from
/// many threads at once.
pub trait DifferentiableMap: Send + Sync {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn eval(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Analytic Jacobian, `None` when only finite differences are available.
    fn jacobian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }

    /// Whether `F(0) = 0`.
    fn zero_normalized(&self) -> bool;

    fn name(&self) -> String;

    /// Norm on the output space.
    fn output_norm(&self) -> NormSpec {
        NormSpec::l2()
    }

    fn is_linear(&self) -> bool {
        false
    }

    /// Linear operator the map is naturally compared against, if any.
    fn reference_operator(&self) -> Option<DenseOperator> {
        None
    }

    fn known_constants(&self) -> Vec<KnownConstant> {
        Vec::new()
    }

    /// Analytic Jacobian when present, central differences otherwise.
    fn derivative(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.jacobian(x)
            .unwrap_or_else(|| fd_jacobian(self, x, default_step(x)).expect("positive step"))
    }
}

/// Finite difference step `max(1e-6, 1e-6·‖x‖∞)`.
pub fn default_step(x: &DVector<f64>) -> f64 {
    1e-6f64.max(1e-6 * x.amax())
}

/// Central difference Jacobian `(F(x+he_j) − F(x−he_j))/(2h)`.
pub fn fd_jacobian<F: DifferentiableMap + ?Sized>(
    f: &F,
    x: &DVector<f64>,
    h: f64,
) -> Result<DMatrix<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!("step must be positive, got {h}")));
    }
    if x.len() != f.in_dim() {
        return Err(Error::invalid(format!(
            "point has dimension {}, map expects {}",
            x.len(),
            f.in_dim()
        )));
    }
    let mut jac = DMatrix::zeros(f.out_dim(), f.in_dim());
    let mut xp = x.clone();
    for j in 0..f.in_dim() {
        xp[j] = x[j] + h;
        let fp = f.eval(&xp);
        xp[j] = x[j] - h;
        let fm = f.eval(&xp);
        xp[j] = x[j];
        jac.set_column(j, &((fp - fm) / (2.0 * h)));
    }
    Ok(jac)
}

/// Largest entrywise deviation between analytic and finite-difference
/// Jacobians, relative to `max(1, ‖J‖max)`.
pub fn jacobian_fd_error<F: DifferentiableMap + ?Sized>(f: &F, x: &DVector<f64>) -> Option<f64> {
    let analytic = f.jacobian(x)?;
    let fd = fd_jacobian(f, x, default_step(x)).ok()?;
    Some((analytic.clone() - fd).amax() / analytic.amax().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_of_linear_map_is_exact() {
        let t = DenseOperator::new(crate::rng::gaussian_matrix(1, 3, 4)).unwrap();
        let f = LinearMap::new(t.clone());
        let x = DVector::from_vec(vec![0.3, -1.0, 2.0, 0.1]);
        let j = fd_jacobian(&f, &x, 1e-3).unwrap();
        assert!((j - t.matrix()).amax() < 1e-10);
        assert!(fd_jacobian(&f, &x, 0.0).is_err());
        assert!(fd_jacobian(&f, &DVector::zeros(2), 1e-3).is_err());
    }

    #[test]
    fn fd_examples() {
        let e = e_map(2.0, 0.0).unwrap();
        let j = fd_jacobian(&e, &DVector::from_element(1, 0.0), 1e-6).unwrap();
        assert!((j[(0, 0)] - 1.0).abs() < 1e-6);
        assert!(j[(1, 0)].abs() < 1e-6);

        let p = perturbed_linear(DenseOperator::identity(1), 0.1, Smooth::Sin).unwrap();
        let j = fd_jacobian(&p, &DVector::from_element(1, 0.0), 1e-6).unwrap();
        assert!((j[(0, 0)] - 1.1).abs() < 1e-6);
    }
}
