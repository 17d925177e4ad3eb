//! Fixed-point iteration with a contraction certified only in the
//! spectral norm, observed to converge in the max norm, and the fitted
//! decay of the Jacobian products.

use nalgebra::DVector;
use nlframe::maps::FnMap;
use nlframe::solvers::{fixed_point_iteration, seeded_contraction, SolverConfig};
use nlframe::spaces::{MatrixNorm, NormSpec};

fn main() -> nlframe::Result<()> {
    let q = seeded_contraction(8, 0.8, 1.2, 3)?;
    println!("|Q|_2 = {:.4}, |Q|_inf = {:.4}", MatrixNorm::Spectral.of(&q), MatrixNorm::MaxRowSum.of(&q));
    let c = DVector::from_fn(8, |i, _| (i as f64 * 0.7).sin());
    let (qq, cc) = (q.clone(), c.clone());
    let g = FnMap::new("affine", 8, 8, move |x| &qq * x + &cc).with_jacobian(move |_| q.clone());

    let mut finals = Vec::new();
    for start in [5.0, -3.0] {
        let mut cfg = SolverConfig::default();
        cfg.initial = Some(vec![start; 8]);
        let rep = fixed_point_iteration(&g, &cfg, MatrixNorm::MaxRowSum, MatrixNorm::Spectral, NormSpec::linf())?;
        let d = rep.decay.clone().unwrap();
        println!("start {start:+}: {} steps, fitted r1 = {:.4}, c = {:.3}", rep.iterations, d.r1, d.c);
        finals.push(rep.final_point());
    }
    println!("starts agree to {:.2e}", (&finals[0] - &finals[1]).amax());
    Ok(())
}
