//! Shared derivative samples `(x, y, F'(x)y, Ty)`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::plan::{pattern_search, SamplingPlan};
use crate::error::{Error, Result};
use crate::maps::DifferentiableMap;
use crate::spaces::{DenseOperator, NormSpec};

#[derive(Debug, Clone)]
pub(crate) struct DerivSample {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub fy: DVector<f64>,
    pub ty: DVector<f64>,
}

/// Which per-sample quantity a refinement climbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Objective {
    Beta,
    Delta,
}

/// Unit vector in the given norm.
pub(crate) fn normalize(v: &DVector<f64>, norm: &NormSpec) -> DVector<f64> {
    v / norm.norm(v)
}

impl DerivSample {
    pub fn beta(&self, norm: &NormSpec) -> f64 {
        norm.norm(&(normalize(&self.fy, norm) - normalize(&self.ty, norm)))
    }

    pub fn delta(&self, norm: &NormSpec) -> f64 {
        norm.norm(&(&self.fy - &self.ty)) / norm.norm(&self.ty)
    }

    /// Angle between `F'(x)y` and `Ty` in ℓ2, via `2·atan2(‖u−v‖, ‖u+v‖)`.
    pub fn theta(&self) -> f64 {
        let u = &self.fy / self.fy.norm();
        let v = &self.ty / self.ty.norm();
        2.0 * (&u - &v).norm().atan2((&u + &v).norm())
    }

    pub fn cosine(&self) -> f64 {
        self.fy.dot(&self.ty) / (self.fy.norm() * self.ty.norm())
    }

    pub fn value(&self, obj: Objective, norm: &NormSpec) -> f64 {
        match obj {
            Objective::Beta => self.beta(norm),
            Objective::Delta => self.delta(norm),
        }
    }
}

pub(crate) fn check_shapes(f: &dyn DifferentiableMap, t: &DenseOperator) -> Result<()> {
    if t.cols() != f.in_dim() || t.rows() != f.out_dim() {
        return Err(Error::invalid(format!(
            "operator is {}x{}, map is {} -> {}",
            t.rows(),
            t.cols(),
            f.in_dim(),
            f.out_dim()
        )));
    }
    Ok(())
}

pub(crate) fn eval_sample(
    jac: &DMatrix<f64>,
    t: &DenseOperator,
    x: &DVector<f64>,
    y: &DVector<f64>,
    norm: &NormSpec,
) -> Result<DerivSample> {
    let fy = jac * y;
    let ty = t.apply(y);
    let fyn = norm.norm(&fy);
    if !(fyn > 0.0 && fyn.is_finite()) {
        return Err(Error::SingularDerivative(format!("F'(x)y = 0 at x = {:?}", x.as_slice())));
    }
    let tyn = norm.norm(&ty);
    if !(tyn > 0.0 && tyn.is_finite()) {
        return Err(Error::NotBoundedBelow(format!("Ty = 0 for y = {:?}", y.as_slice())));
    }
    Ok(DerivSample { x: x.clone(), y: y.clone(), fy, ty })
}

/// Base grid (all points × all directions, point-major) followed by refined samples.
pub(crate) struct Pool {
    pub samples: Vec<DerivSample>,
    pub n_x: usize,
    pub n_y: usize,
    pub norm: NormSpec,
}

impl Pool {
    pub fn build(
        f: &dyn DifferentiableMap,
        t: &DenseOperator,
        plan: &SamplingPlan,
        objectives: &[Objective],
    ) -> Result<Self> {
        plan.validate()?;
        check_shapes(f, t)?;
        let norm = f.output_norm();
        norm.check_dim(f.out_dim())?;
        let n = f.in_dim();
        let xs = plan.points(n);
        let ys = plan.directions(n);
        let rows: Vec<Result<Vec<DerivSample>>> = xs
            .par_iter()
            .map(|x| {
                let jac = f.derivative(x);
                ys.iter().map(|y| eval_sample(&jac, t, x, y, &norm)).collect()
            })
            .collect();
        let mut samples = Vec::with_capacity(xs.len() * ys.len());
        for r in rows {
            samples.extend(r?);
        }
        let mut pool = Pool { samples, n_x: xs.len(), n_y: ys.len(), norm };
        for &obj in objectives {
            let extra = pool.refine(f, t, plan, obj);
            pool.samples.extend(extra);
        }
        Ok(pool)
    }

    pub fn n_base(&self) -> usize {
        self.n_x * self.n_y
    }

    /// Indices of the `k` largest values (lowest index first among ties).
    fn top(&self, k: usize, obj: Objective) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.samples.len()).collect();
        let vals: Vec<f64> = self.samples.iter().map(|s| s.value(obj, &self.norm)).collect();
        idx.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
        idx.truncate(k);
        idx
    }

    fn refine(
        &self,
        f: &dyn DifferentiableMap,
        t: &DenseOperator,
        plan: &SamplingPlan,
        obj: Objective,
    ) -> Vec<DerivSample> {
        if plan.refine_rounds == 0 {
            return Vec::new();
        }
        let n = f.in_dim();
        let move_y = n > 1;
        let dim = if move_y { 2 * n } else { n };
        let mut steps = vec![plan.spacing(n); n];
        let mut clamp = vec![Some(plan.box_radius); n];
        if move_y {
            steps.extend(std::iter::repeat_n(0.25, n));
            clamp.extend(std::iter::repeat_n(None, n));
        }
        let norm = &self.norm;
        let split = |p: &[f64]| -> (DVector<f64>, DVector<f64>) {
            let x = DVector::from_column_slice(&p[..n]);
            let y = if move_y {
                let y = DVector::from_column_slice(&p[n..dim]);
                let yn = y.norm();
                y / yn
            } else {
                DVector::from_element(1, 1.0)
            };
            (x, y)
        };
        let eval = |p: &[f64]| -> Option<DerivSample> {
            let (x, y) = split(p);
            if !y.iter().all(|v| v.is_finite()) {
                return None;
            }
            eval_sample(&f.derivative(&x), t, &x, &y, norm).ok()
        };
        self.top(3, obj)
            .par_iter()
            .filter_map(|&i| {
                let s = &self.samples[i];
                let mut start: Vec<f64> = s.x.iter().copied().collect();
                if move_y {
                    start.extend(s.y.iter().copied());
                }
                let (best, _) = pattern_search(
                    start,
                    s.value(obj, norm),
                    steps.clone(),
                    &clamp,
                    plan.refine_rounds,
                    |p| eval(p).map(|s| s.value(obj, norm)),
                );
                eval(&best)
            })
            .collect()
    }

    /// Largest per-sample value and its index (lowest index among ties).
    pub fn argmax(&self, value: impl Fn(&DerivSample) -> f64) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, s) in self.samples.iter().enumerate() {
            let v = value(s);
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    }
}
