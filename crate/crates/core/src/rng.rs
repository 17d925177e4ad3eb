//! Seeded random streams. Every stochastic routine in the crate draws from
//! a ChaCha stream derived from a user seed and a fixed stream label, so
//! results only depend on `(seed, label)`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub(crate) fn stream(seed: u64, label: u64) -> ChaCha8Rng {
    // splitmix64 of the label keeps nearby labels far apart
    let mut z = label.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(seed ^ z)
}

pub(crate) fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Uniformly distributed unit vector (Euclidean sphere).
pub(crate) fn unit_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let v = gaussian_vector(rng, n);
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Matrix with i.i.d. standard normal entries.
pub fn gaussian_matrix(seed: u64, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut rng = stream(seed, 0x6a75);
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with sign fix).
pub fn orthogonal_matrix(seed: u64, n: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(seed ^ 0x0717, n, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Shifted Halton sequence: `count` points in `[0,1)^dim`.
///
/// Point `i` does not depend on `count`, so a longer sequence always
/// contains a shorter one with the same seed.
pub(crate) struct Halton {
    shifts: Vec<f64>,
}

const PRIMES: [u64; 40] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
];

impl Halton {
    pub(crate) fn new(seed: u64, dim: usize) -> Self {
        let mut rng = stream(seed, 0x4a17);
        Self {
            shifts: (0..dim).map(|_| rng.random::<f64>()).collect(),
        }
    }

    pub(crate) fn point(&self, index: usize) -> Vec<f64> {
        self.shifts
            .iter()
            .enumerate()
            .map(|(d, shift)| {
                let u = if d < PRIMES.len() {
                    radical_inverse(index as u64 + 1, PRIMES[d])
                } else {
                    // beyond the prime table fall back to a Weyl sequence
                    ((index as f64 + 1.0) * (d as f64 + 2.0).sqrt()).fract()
                };
                (u + shift).fract()
            })
            .collect()
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_prefix_is_stable() {
        let h = Halton::new(3, 2);
        let a: Vec<_> = (0..10).map(|i| h.point(i)).collect();
        let h2 = Halton::new(3, 2);
        for (i, p) in a.iter().enumerate() {
            assert_eq!(p, &h2.point(i));
            assert!(p.iter().all(|&u| (0.0..1.0).contains(&u)));
        }
    }

    #[test]
    fn orthogonal_matrix_is_orthogonal() {
        let q = orthogonal_matrix(11, 6);
        let e = &q.transpose() * &q - DMatrix::identity(6, 6);
        assert!(e.abs().max() < 1e-12);
    }
}
