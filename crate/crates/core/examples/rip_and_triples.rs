//! Exact restricted isometry constants by enumeration, and the constants
//! and axiom checks of classical sparse triples.

use nalgebra::DMatrix;
use nlframe::certify::{rip_delta, SamplingPlan};
use nlframe::rng::gaussian_matrix;
use nlframe::spaces::{DenseOperator, SubspaceUnion};
use nlframe::sparse::{a_a, s_a, verify_axioms, SparseTriple};

fn main() -> nlframe::Result<()> {
    let t = DenseOperator::new(gaussian_matrix(8, 4, 8) / 2.0)?;
    let u = SubspaceUnion::sparse(8, 1)?;
    for k in 1..=3 {
        let r = rip_delta(&t, &u, k, 1 << 20)?;
        println!("delta_{k}A = {:.6} over {} supports", r.delta, r.n_subspaces);
    }
    let degenerate = DenseOperator::new(DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]))?;
    let r = rip_delta(&degenerate, &SubspaceUnion::sparse(3, 1)?, 2, 1 << 20)?;
    println!("degenerate T: delta_2A = {}", r.delta);

    let plan = SamplingPlan::default();
    for s in [1, 2, 3] {
        let triple = SparseTriple::classical(6, s)?;
        let sa = s_a(&triple, &plan)?;
        let aa = a_a(&triple, &plan)?;
        let ok = verify_axioms(&triple, &plan)?.iter().all(|v| v.pass);
        println!("classical(6,{s}): s_A = {}, a_A ~ {:.4} (1/s = {:.4}), axioms {}", sa.value, aa.estimate, 1.0 / s as f64, if ok { "hold" } else { "fail" });
    }
    Ok(())
}
