//! Van Cittert iteration on a seeded 4-dimensional perturbed-linear map,
//! then the refusal on E_{2,0}, whose beta reaches sqrt(2).

use nalgebra::{DMatrix, DVector};
use nlframe::certify::SamplingPlan;
use nlframe::maps::{e_map, perturbed_linear, DifferentiableMap, EMap, Smooth};
use nlframe::rng::gaussian_matrix;
use nlframe::solvers::{van_cittert_iteration, van_cittert_window, IterationConstants, SolverConfig};
use nlframe::spaces::DenseOperator;
use nlframe::Error;

fn main() -> nlframe::Result<()> {
    let t = DenseOperator::new(DMatrix::identity(4, 4) + gaussian_matrix(41, 4, 4) * 0.2)?;
    let f = perturbed_linear(t.clone(), 0.05, Smooth::Tanh)?;
    let plan = SamplingPlan::default();
    let c = IterationConstants::sample(&f, &t, &plan)?;
    let window = van_cittert_window(&c, &t);
    println!("beta {:.4}, A {:.4}, B {:.4}, mu window (0, {window:.4})", c.beta, c.stability_lower, c.stability_upper);

    let truth = DVector::from_vec(vec![0.5, -1.0, 0.25, 2.0]);
    let noise = DVector::from_vec(vec![0.005, -0.005, 0.005, -0.005]);
    let z = f.eval(&truth) + noise;
    let mut cfg = SolverConfig::with_mu(0.5 * window);
    cfg.truth = Some(truth.iter().copied().collect());
    cfg.constants = Some(c);
    let rep = van_cittert_iteration(&f, &t, &z, &cfg)?;
    let (b, m) = (rep.error_bound.unwrap(), rep.measured_error.unwrap());
    println!("converged {} in {} steps, error {:.3e} <= bound {:.3e}", rep.converged, rep.iterations, m.l2, b.value);

    let e = e_map(2.0, 0.0)?;
    let z = e.eval(&DVector::from_element(1, 0.3));
    let mut cfg = SolverConfig::with_mu(0.1);
    cfg.plan = SamplingPlan::new(12.0, 1, 2000, 8, 0)?;
    match van_cittert_iteration(&e, &EMap::t1(), &z, &cfg) {
        Err(err @ Error::CertificateFailed { .. }) => println!("E_(2,0) refused (exit {}): {err}", err.exit_code()),
        other => println!("unexpected: {:?}", other.map(|r| r.converged)),
    }
    Ok(())
}
