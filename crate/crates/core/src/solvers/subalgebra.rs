use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::stream;
use crate::spaces::MatrixNorm;

/// Smallest `D` making the differential-subalgebra inequality hold on every
/// sampled pair at a fixed exponent. Evidence, not a proof.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubalgebraFit {
    pub d: f64,
    pub theta: f64,
    pub n_pairs: usize,
    /// Index of the pair attaining `d`.
    pub worst_pair: Option<usize>,
    /// At least a hundred pairs were supplied.
    pub sufficient: bool,
}

/// `‖AB‖_A ≤ D‖A‖_A‖B‖_A((‖A‖_H/‖A‖_A)^θ + (‖B‖_H/‖B‖_A)^θ)`.
pub fn subalgebra_fit(
    norm_a: MatrixNorm,
    norm_h: MatrixNorm,
    pairs: &[(DMatrix<f64>, DMatrix<f64>)],
    theta: f64,
) -> SubalgebraFit {
    let mut d = 0.0;
    let mut worst = None;
    for (i, (a, b)) in pairs.iter().enumerate() {
        let (aa, ab) = (norm_a.of(a), norm_a.of(b));
        if aa == 0.0 || ab == 0.0 {
            continue;
        }
        let rhs = aa * ab * ((norm_h.of(a) / aa).powf(theta) + (norm_h.of(b) / ab).powf(theta));
        let q = norm_a.of(&(a * b)) / rhs;
        if q > d {
            d = q;
            worst = Some(i);
        }
    }
    SubalgebraFit { d, theta, n_pairs: pairs.len(), worst_pair: worst, sufficient: pairs.len() >= 100 }
}

/// Seeded random pairs of `n×n` matrices with off-diagonal decay
/// `|a_ij| ≤ (1 + |i − j|)^{-decay}`.
pub fn banded_pairs(n: usize, count: usize, decay: f64, seed: u64) -> Vec<(DMatrix<f64>, DMatrix<f64>)> {
    let mut rng = stream(seed, 0x5ab0);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
        DMatrix::from_fn(n, n, |i, j| {
            let w = (1.0 + i.abs_diff(j) as f64).powf(-decay);
            w * rng.random_range(-1.0..1.0)
        })
    };
    (0..count).map(|_| (draw(&mut rng), draw(&mut rng))).collect()
}
