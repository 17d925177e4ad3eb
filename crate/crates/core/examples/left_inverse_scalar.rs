//! Left-inverse iteration on F(x) = x + 0.1 sin x with mu = 1/1.1.
//! Prints the measured step ratios against the predicted rate and the
//! error bound for noisy data.

use nalgebra::DVector;
use nlframe::maps::{perturbed_linear, DifferentiableMap, Smooth};
use nlframe::solvers::{left_inverse_iteration, SolverConfig};
use nlframe::spaces::DenseOperator;

fn main() -> nlframe::Result<()> {
    let t = DenseOperator::identity(1);
    let f = perturbed_linear(t.clone(), 0.1, Smooth::Sin)?;
    let truth = DVector::from_element(1, 1.3);
    for noise in [0.0, 0.01] {
        let z = f.eval(&truth).add_scalar(noise);
        let mut cfg = SolverConfig::with_mu(1.0 / 1.1);
        cfg.truth = Some(vec![truth[0]]);
        let rep = left_inverse_iteration(&f, &t, &t, &z, &cfg)?;
        println!("noise {noise}: {} iterations, x = {:.12}", rep.iterations, rep.final_point[0]);
        println!("  predicted rate {:.6}, worst measured {:.6}", rep.r0_predicted.unwrap_or(f64::NAN), rep.max_ratio_above_floor().unwrap_or(0.0));
        if let (Some(b), Some(m)) = (rep.error_bound, rep.measured_error) {
            println!("  error {:.3e} <= bound {:.3e}", m.l2, b.value);
        }
    }
    Ok(())
}
