//! Sparse approximation triples, greedy approximation, and constrained
//! M-norm recovery with predicted error bounds.

mod approx;
mod recover;
mod triple;

pub use approx::{
    a_a, a_a_value, approximation_ratio, best_approximator, greedy, sqrt_approx_check, s_a, second_approximator,
    sigma_am, sigma_kam, verify_axioms, AaReport, GreedyTrace, SqrtApproxCheck,
};
pub use recover::{
    composed_constants, predict_bounds, recover, ComposedConstants, ErrorPair, PenaltySettings, PredictedBounds,
    RecoveryMethod, RecoveryOptions, RecoveryReport, FEAS_TOL,
};
pub use triple::{SparseTriple, TripleKind, TripleSpec};
