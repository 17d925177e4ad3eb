//! Greedy approximation in classical(8,2): errors, the telescoping
//! identity, and comparison with the best k-term error.

use nalgebra::DVector;
use nlframe::sparse::{greedy, sqrt_approx_check, SparseTriple};

fn main() -> nlframe::Result<()> {
    let triple = SparseTriple::classical(8, 2)?;
    let x = DVector::from_vec(vec![3.0, -0.5, 1.25, 0.0, 2.0, -0.1, 0.7, 0.05]);
    let trace = greedy(&x, &triple, 4)?;
    println!("k  |x - x^k|_M  sigma_kA");
    let sigma = trace.sigma.clone().unwrap_or_default();
    for (k, e) in trace.errors.iter().enumerate() {
        println!("{k}  {e:>10.6}  {:>8.6}", sigma.get(k).copied().unwrap_or(f64::NAN));
    }
    println!("telescoping defect {:.2e}", trace.telescoping_defect);
    let p = sqrt_approx_check(&x, &triple, 0.5)?;
    println!("|x - x_A|_H = {:.4} <= sqrt(a_A)|x|_M = {:.4}: {}", p.lhs, p.rhs, p.pass);
    Ok(())
}
