use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, unit_vector, Halton};

/// Finite sampling scheme standing in for a supremum over the whole space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingPlan {
    /// Points are drawn from the box `[-box_radius, box_radius]ⁿ`.
    pub box_radius: f64,
    /// Number of unit directions (ignored for one-dimensional inputs).
    pub n_dir: usize,
    /// Number of base points.
    pub n_pts: usize,
    /// Pattern-search rounds around the best samples.
    pub refine_rounds: usize,
    pub seed: u64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self {
            box_radius: 5.0,
            n_dir: 32,
            n_pts: 512,
            refine_rounds: 12,
            seed: 0,
        }
    }
}

impl SamplingPlan {
    pub fn new(box_radius: f64, n_dir: usize, n_pts: usize, refine_rounds: usize, seed: u64) -> Result<Self> {
        let p = Self { box_radius, n_dir, n_pts, refine_rounds, seed };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.box_radius.is_finite() && self.box_radius > 0.0) {
            return Err(Error::invalid(format!("box_radius must be positive, got {}", self.box_radius)));
        }
        if self.n_dir == 0 || self.n_pts == 0 {
            return Err(Error::invalid("n_dir and n_pts must be at least 1"));
        }
        Ok(())
    }

    /// Base points: a shifted Halton sequence scaled to the box.
    pub(crate) fn points(&self, dim: usize) -> Vec<DVector<f64>> {
        let h = Halton::new(self.seed, dim);
        (0..self.n_pts)
            .map(|i| {
                DVector::from_iterator(dim, h.point(i).into_iter().map(|u| (2.0 * u - 1.0) * self.box_radius))
            })
            .collect()
    }

    /// Base directions, Euclidean unit vectors: `e_1, …, e_n` first, then
    /// seeded uniform directions. One-dimensional inputs use `[1]` only.
    pub(crate) fn directions(&self, dim: usize) -> Vec<DVector<f64>> {
        if dim == 1 {
            return vec![DVector::from_element(1, 1.0)];
        }
        let mut rng = stream(self.seed, 0xd1);
        (0..self.n_dir)
            .map(|j| {
                if j < dim {
                    let mut e = DVector::zeros(dim);
                    e[j] = 1.0;
                    e
                } else {
                    unit_vector(&mut rng, dim)
                }
            })
            .collect()
    }

    /// Spacing of the base grid along one axis.
    pub(crate) fn spacing(&self, dim: usize) -> f64 {
        2.0 * self.box_radius / (self.n_pts as f64).powf(1.0 / dim as f64)
    }
}

/// Maximizes `f` by compass search, halving the steps after each round.
///
/// Coordinates flagged in `clamp` stay inside `[-r, r]`. Returns the best
/// point and value; `f` may return `None` to reject a point.
pub(crate) fn pattern_search<F>(
    start: Vec<f64>,
    value: f64,
    mut steps: Vec<f64>,
    clamp: &[Option<f64>],
    rounds: usize,
    f: F,
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let mut best = start;
    let mut best_v = value;
    let dim = best.len();
    for _ in 0..rounds {
        for _pass in 0..(4 * dim + 4) {
            let mut improved: Option<(Vec<f64>, f64)> = None;
            for k in 0..dim {
                for sign in [1.0, -1.0] {
                    let mut cand = best.clone();
                    cand[k] += sign * steps[k];
                    if let Some(r) = clamp[k] {
                        cand[k] = cand[k].clamp(-r, r);
                    }
                    if cand[k] == best[k] {
                        continue;
                    }
                    if let Some(v) = f(&cand) {
                        let current = improved.as_ref().map_or(best_v, |c| c.1);
                        if v > current {
                            improved = Some((cand, v));
                        }
                    }
                }
            }
            match improved {
                Some((p, v)) => {
                    best = p;
                    best_v = v;
                }
                None => break,
            }
        }
        for s in steps.iter_mut() {
            *s *= 0.5;
        }
    }
    (best, best_v)
}
