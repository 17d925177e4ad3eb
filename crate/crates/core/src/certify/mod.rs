//! Sampled and exact estimates of map constants, with verdicts for the
//! sufficient conditions that use them.
//!
//! Suprema over the whole space are replaced by a seeded base sample set
//! plus compass refinement; every estimate is labelled with its provenance.

mod constants;
mod plan;
mod pool;
mod sparse;

pub use constants::{
    alpha_f, beta_ft, certify_map, delta_ft, derivative_ratio_bounds, theta_ft, uniform_stability,
    CertificationReport, CertificationSuite, OperatorSummary, RatioBounds, StabilityReport, Witness,
};
pub use plan::SamplingPlan;
pub(crate) use plan::pattern_search;
pub use sparse::{
    almost_linear_constants, gamma_ka, recovery_condition, rip_delta, sparse_riesz_constants,
    GammaReport, RipReport,
};

#[cfg(test)]
mod tests;
