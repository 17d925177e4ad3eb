//! Constrained l1 recovery: exact support enumeration against the penalty
//! method on a linear instance, then a nonlinear instance with composed
//! constants and predicted bounds.

use nalgebra::DVector;
use nlframe::certify::SamplingPlan;
use nlframe::maps::{perturbed_linear, DifferentiableMap, LinearMap, Smooth};
use nlframe::rng::{gaussian_matrix, orthogonal_matrix};
use nlframe::spaces::DenseOperator;
use nlframe::sparse::{recover, RecoveryMethod, RecoveryOptions, SparseTriple};

fn main() -> nlframe::Result<()> {
    let t = DenseOperator::new(gaussian_matrix(2, 5, 10) / 5f64.sqrt())?;
    let f = LinearMap::new(t.clone());
    let triple = SparseTriple::classical(10, 2)?;
    let mut truth = DVector::zeros(10);
    truth[1] = 1.5;
    truth[7] = -0.8;
    let z = f.eval(&truth);
    let base = RecoveryOptions { truth: Some(truth.iter().copied().collect()), constants: false, ..Default::default() };
    for method in [RecoveryMethod::SupportEnum, RecoveryMethod::Penalty] {
        let opts = RecoveryOptions { method, ..base.clone() };
        let r = recover(&f, &z, 0.05, &triple, None, &opts)?;
        println!("{method:?}: |x*|_1 = {:.6}, residual {:.4}, error {:.4}", r.objective, r.residual, r.measured.unwrap().h);
    }

    let t = DenseOperator::new(orthogonal_matrix(5, 12))?;
    let f = perturbed_linear(t.clone(), 0.01, Smooth::Tanh)?;
    let triple = SparseTriple::classical(12, 1)?;
    let mut truth = DVector::zeros(12);
    truth[4] = 0.8;
    truth[9] = 0.05;
    let z = f.eval(&truth);
    let opts = RecoveryOptions {
        truth: Some(truth.iter().copied().collect()),
        plan: SamplingPlan { box_radius: 1.0, n_pts: 256, ..Default::default() },
        ..Default::default()
    };
    let r = recover(&f, &z, 0.02, &triple, Some(&t), &opts)?;
    let (m, p) = (r.measured.unwrap(), r.predicted.unwrap());
    println!("nonlinear: H error {:.4} <= {:.4}, M error {:.4} <= {:.4}", m.h, p.h, m.m, p.m);
    Ok(())
}
