//! Iterative reconstruction: left-inverse and Van Cittert iterations,
//! fixed-point iteration with product-norm tracking, and the localized
//! variant measured in ℓ∞.

mod fixed_point;
mod left_inverse;
mod subalgebra;
mod van_cittert;

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::certify::{beta_ft, derivative_ratio_bounds, uniform_stability, SamplingPlan};
use crate::error::{Error, Result};
use crate::maps::DifferentiableMap;
use crate::report::{Provenance, Quantity, Verdict};
use crate::spaces::{DenseOperator, NormSpec};

pub use fixed_point::{fit_decay, fixed_point_iteration, localized_iteration, seeded_contraction, DecayFit};
pub use left_inverse::left_inverse_iteration;
pub use subalgebra::{banded_pairs, subalgebra_fit, SubalgebraFit};
pub use van_cittert::{van_cittert_iteration, van_cittert_window};

/// Iteration settings shared by every solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Relaxation factor μ.
    pub mu: f64,
    pub max_iter: usize,
    /// Stop once `‖x_{n+1} − x_n‖ ≤ tol·max(1, ‖x_n‖)`.
    pub tol: f64,
    /// Norm used by the stopping rule.
    pub norm: NormSpec,
    /// Starting point, zero when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    /// Ground truth, used only to report errors and the noise level.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<Vec<f64>>,
    /// Noise norm when no truth is supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_level: Option<f64>,
    /// Run even when a precondition fails; verdicts are marked unverified.
    pub force: bool,
    /// Sampling used for the constants in the preconditions.
    pub plan: SamplingPlan,
    /// Constants to use instead of sampling them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<IterationConstants>,
    /// Keep every k-th iterate in the report (0 keeps none).
    pub keep_iterates: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mu: 1.0,
            max_iter: 10_000,
            tol: 1e-12,
            norm: NormSpec::l2(),
            initial: None,
            truth: None,
            noise_level: None,
            force: false,
            plan: SamplingPlan::default(),
            constants: None,
            keep_iterates: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_mu(mu: f64) -> Self {
        Self { mu, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        self.plan.validate()
    }

    fn initial(&self, n: usize) -> Result<DVector<f64>> {
        match &self.initial {
            Some(v) if v.len() != n => Err(Error::invalid(format!(
                "initial point has dimension {}, expected {n}",
                v.len()
            ))),
            Some(v) => Ok(DVector::from_column_slice(v)),
            None => Ok(DVector::zeros(n)),
        }
    }

    fn truth(&self, n: usize) -> Result<Option<DVector<f64>>> {
        match &self.truth {
            Some(v) if v.len() != n => Err(Error::invalid(format!(
                "truth has dimension {}, expected {n}",
                v.len()
            ))),
            Some(v) => Ok(Some(DVector::from_column_slice(v))),
            None => Ok(None),
        }
    }
}

/// Constants consumed by the step-size windows and error bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationConstants {
    /// β_{F,T}.
    pub beta: f64,
    /// inf and sup of `‖F'(x)y‖/‖Ty‖`.
    pub ratio_inf: f64,
    pub ratio_sup: f64,
    /// inf and sup of `‖F'(x)y‖/‖y‖`.
    pub stability_lower: f64,
    pub stability_upper: f64,
    pub provenance: Provenance,
}

impl IterationConstants {
    /// Estimates every constant with the given plan.
    pub fn sample(f: &dyn DifferentiableMap, t: &DenseOperator, plan: &SamplingPlan) -> Result<Self> {
        let beta = beta_ft(f, t, plan)?.estimate;
        let ratio = derivative_ratio_bounds(f, t, plan)?;
        let stab = uniform_stability(f, plan)?;
        Ok(Self {
            beta,
            ratio_inf: ratio.inf,
            ratio_sup: ratio.sup,
            stability_lower: stab.lower,
            stability_upper: stab.upper,
            provenance: Provenance::SampledLowerBound,
        })
    }

    fn resolve(cfg: &SolverConfig, f: &dyn DifferentiableMap, t: &DenseOperator) -> Result<Self> {
        match &cfg.constants {
            Some(c) => Ok(c.clone()),
            None => Self::sample(f, t, &cfg.plan),
        }
    }
}

/// One row of the iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    /// `‖x_iter − x_{iter−1}‖`.
    pub residual: f64,
    /// `residual / previous residual`.
    pub ratio: Option<f64>,
    pub err_l2: Option<f64>,
    pub err_linf: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredError {
    pub l2: f64,
    pub linf: f64,
}

/// Everything a solver run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub algorithm: String,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
    /// Successive residual ratios, `iterations − 1` entries.
    pub ratios: Vec<f64>,
    /// Ratios with a denominator below this are at the rounding floor.
    pub ratio_floor: f64,
    pub r0_predicted: Option<f64>,
    pub final_point: Vec<f64>,
    /// `C` in `‖x∞ − x⁰‖ ≤ C‖ε‖`.
    pub bound_coefficient: Option<Quantity>,
    /// Norm in which the bound and the noise are measured.
    pub bound_norm: String,
    pub noise_level: Option<f64>,
    pub error_bound: Option<Quantity>,
    pub measured_error: Option<MeasuredError>,
    pub consistency_residual: f64,
    pub constants: BTreeMap<String, Quantity>,
    pub verdicts: Vec<Verdict>,
    pub forced: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecayFit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub iterates: Vec<Vec<f64>>,
}

impl SolverReport {
    pub fn final_point(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.final_point)
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.residual).collect()
    }

    /// Largest ratio whose denominator is above the rounding floor.
    pub fn max_ratio_above_floor(&self) -> Option<f64> {
        self.trace
            .windows(2)
            .filter(|w| w[0].residual > self.ratio_floor)
            .map(|w| w[1].residual / w[0].residual)
            .reduce(f64::max)
    }

    /// Whether the measured error respects the bound (when both are known).
    pub fn bound_holds(&self) -> Option<bool> {
        let m = self.measured_error?;
        let e = if self.bound_norm == "linf" { m.linf } else { m.l2 };
        Some(e <= self.error_bound?.value)
    }

    pub fn verdict(&self, condition: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.condition == condition)
    }
}

/// Records a verdict; a failure refuses the run unless `force` is set.
pub(crate) fn gate(verdicts: &mut Vec<Verdict>, v: Verdict, force: bool) -> Result<()> {
    if !v.pass {
        if !force {
            let margin = if v.value <= v.threshold { v.value - v.threshold } else { v.threshold - v.value };
            return Err(Error::CertificateFailed { condition: v.condition, margin });
        }
        verdicts.push(v.with_note("unverified: run forced past a failed precondition"));
        return Ok(());
    }
    verdicts.push(v);
    Ok(())
}

pub(crate) struct Run {
    pub x: DVector<f64>,
    pub trace: Vec<TraceRow>,
    pub ratios: Vec<f64>,
    pub converged: bool,
    pub floor: f64,
    pub iterates: Vec<Vec<f64>>,
    pub steps: Vec<(DVector<f64>, DVector<f64>)>,
}

/// Runs `x ← step(x)` with the shared stopping and divergence rules.
/// `keep_steps` retains every `(x_{n−1}, x_n)` pair.
pub(crate) fn run_iteration(
    x0: DVector<f64>,
    cfg: &SolverConfig,
    truth: Option<&DVector<f64>>,
    keep_steps: bool,
    step: impl Fn(&DVector<f64>) -> DVector<f64>,
) -> Result<Run> {
    let norm = &cfg.norm;
    norm.check_dim(x0.len())?;
    let mut x = x0;
    let mut trace: Vec<TraceRow> = Vec::new();
    let mut ratios = Vec::new();
    let mut iterates = Vec::new();
    let mut steps = Vec::new();
    let mut above_one = 0usize;
    let mut converged = false;
    let mut floor: f64 = 0.0;
    for n in 1..=cfg.max_iter {
        let next = step(&x);
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { iterations: n });
        }
        let r = norm.norm(&(&next - &x));
        let scale = norm.norm(&x).max(1.0);
        let step_floor = 1e3 * f64::EPSILON * scale;
        floor = floor.max(step_floor);
        let ratio = trace.last().map(|prev| r / prev.residual);
        if let Some(q) = ratio {
            ratios.push(q);
            let prev = trace.last().unwrap().residual;
            if q >= 1.0 && prev > step_floor {
                above_one += 1;
                if above_one >= 10 {
                    return Err(Error::Divergence { iterations: n });
                }
            } else {
                above_one = 0;
            }
        }
        let (err_l2, err_linf) = match truth {
            Some(t) => {
                let e = &next - t;
                (Some(e.norm()), Some(e.amax()))
            }
            None => (None, None),
        };
        trace.push(TraceRow { iter: n, residual: r, ratio, err_l2, err_linf });
        if keep_steps {
            steps.push((x.clone(), next.clone()));
        }
        if cfg.keep_iterates > 0 && n % cfg.keep_iterates == 0 {
            iterates.push(next.iter().copied().collect());
        }
        let stop = r <= cfg.tol * scale;
        x = next;
        if stop {
            converged = true;
            break;
        }
    }
    Ok(Run { x, trace, ratios, converged, floor, iterates, steps })
}

pub(crate) fn measured(x: &DVector<f64>, truth: Option<&DVector<f64>>) -> Option<MeasuredError> {
    truth.map(|t| {
        let e = x - t;
        MeasuredError { l2: e.norm(), linf: e.amax() }
    })
}

/// Noise norm: from the truth when given, else the configured level.
pub(crate) fn noise_norm(
    f: &dyn DifferentiableMap,
    z: &DVector<f64>,
    truth: Option<&DVector<f64>>,
    cfg: &SolverConfig,
    norm: &NormSpec,
) -> Option<f64> {
    match truth {
        Some(t) => Some(norm.norm(&(z - f.eval(t)))),
        None => cfg.noise_level,
    }
}

pub(crate) fn check_problem(f: &dyn DifferentiableMap, t: &DenseOperator, z: &DVector<f64>) -> Result<()> {
    if t.rows() != f.out_dim() || t.cols() != f.in_dim() {
        return Err(Error::invalid(format!(
            "operator is {}x{}, map is {} -> {}",
            t.rows(),
            t.cols(),
            f.in_dim(),
            f.out_dim()
        )));
    }
    if z.len() != f.out_dim() {
        return Err(Error::invalid(format!(
            "data has dimension {}, map output has {}",
            z.len(),
            f.out_dim()
        )));
    }
    Ok(())
}
