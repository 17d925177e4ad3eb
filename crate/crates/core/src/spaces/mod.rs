//! Finite-dimensional vectors, norms, dense operators and unions of subspaces.

mod io;
mod norm;
mod operator;
mod union;
mod vector;

pub use io::{read_matrix, read_vector, write_matrix, write_vector, MatrixFile};
pub use norm::{MatrixNorm, NormKind, NormSpec};
pub use operator::{singular_bounds, DenseOperator};
pub use union::{best_subspace, project, sum_union, SubspaceUnion, DEFAULT_ENUM_CAP};
pub(crate) use union::combinations;
pub use vector::FiniteVector;

/// Binomial coefficient saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::binomial;

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(12, 0), 1);
        assert_eq!(binomial(69, 4), 864_501);
        assert_eq!(binomial(3, 5), 0);
    }
}
