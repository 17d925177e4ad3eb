use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI, SQRT_2};

use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;

use super::*;
use crate::error::Error;
use crate::maps::{catalog, e_map, perturbed_linear, DifferentiableMap, EMap, LinearMap, Smooth};
use crate::spaces::{DenseOperator, SubspaceUnion, DEFAULT_ENUM_CAP};

fn plan_1d(n: usize, r: f64) -> SamplingPlan {
    SamplingPlan::new(r, 1, n, 30, 7).unwrap()
}

fn scalar_sin(eta: f64) -> impl DifferentiableMap {
    perturbed_linear(DenseOperator::identity(1), eta, Smooth::Sin).unwrap()
}

#[test]
fn linear_map_constants_vanish() {
    let t = DenseOperator::new(crate::rng::gaussian_matrix(4, 5, 3)).unwrap();
    let f = LinearMap::new(t.clone());
    let s = certify_map(&f, &t, &SamplingPlan::default()).unwrap();
    assert_eq!(s.beta.estimate, 0.0);
    assert_eq!(s.delta.estimate, 0.0);
    assert_eq!(s.alpha.estimate, 0.0);
    assert_eq!(s.theta.as_ref().unwrap().estimate, 0.0);
    assert_abs_diff_eq!(s.stability.lower, t.sigma_min(), epsilon = 1e-8);
    assert_abs_diff_eq!(s.stability.upper, t.sigma_max(), epsilon = 1e-8);
}

#[test]
fn e2_beta_and_theta() {
    let e = e_map(2.0, 0.0).unwrap();
    let plan = plan_1d(10_000, 4.0 * PI);
    let b = beta_ft(&e, &EMap::t1(), &plan).unwrap();
    assert!(b.estimate >= SQRT_2 - 1e-3 && b.estimate <= SQRT_2 + 1e-9);
    let th = theta_ft(&e, &EMap::t1(), &plan).unwrap();
    assert_abs_diff_eq!(th.estimate, FRAC_PI_2, epsilon = 1e-3);
}

#[test]
fn e_map_stability_matches_envelope() {
    let s = uniform_stability(&e_map(2.0, 0.0).unwrap(), &plan_1d(2000, 10.0)).unwrap();
    assert!(s.lower >= SQRT_2 / 2.0 * (1.0 - 1e-9));
    assert!(s.upper <= 2.0);
    for p in [1.0, f64::INFINITY] {
        for eps in [0.0, FRAC_PI_6] {
            let e = e_map(p, eps).unwrap();
            let s = uniform_stability(&e, &plan_1d(2000, 10.0)).unwrap();
            let known = e.known_constants();
            let lo = known.iter().find(|k| k.name == "stability_lower").unwrap().value;
            let hi = known.iter().find(|k| k.name == "stability_upper").unwrap().value;
            assert!(s.lower >= lo - 1e-12 && s.lower <= lo + 1e-6, "p={p} eps={eps} {} {lo}", s.lower);
            assert!(s.upper <= hi + 1e-12 && s.upper >= hi - 1e-6, "p={p} eps={eps}");
        }
    }
}

#[test]
fn scalar_perturbed_constants() {
    let f = scalar_sin(0.1);
    let t = DenseOperator::identity(1);
    let plan = plan_1d(2000, 4.0);
    let s = uniform_stability(&f, &plan).unwrap();
    assert_abs_diff_eq!(s.lower, 0.9, epsilon = 1e-3);
    assert_abs_diff_eq!(s.upper, 1.1, epsilon = 1e-3);
    let b = beta_ft(&f, &t, &plan).unwrap();
    assert_eq!(b.estimate, 0.0);
    let d = delta_ft(&f, &t, &plan).unwrap();
    assert_abs_diff_eq!(d.estimate, 0.1, epsilon = 1e-4);
    assert!(b.estimate <= 2.0 * d.estimate / (1.0 - d.estimate) + 1e-9);
    let th = theta_ft(&f, &t, &plan).unwrap();
    assert_eq!(th.estimate, 0.0);
    let r = derivative_ratio_bounds(&f, &t, &plan).unwrap();
    assert_abs_diff_eq!(r.inf, 0.9, epsilon = 1e-9);
    assert_abs_diff_eq!(r.sup, 1.1, epsilon = 1e-9);
}

#[test]
fn alpha_examples() {
    let plan = plan_1d(4000, 4.0 * PI);
    let a = alpha_f(&e_map(f64::INFINITY, 0.0).unwrap(), Some(&EMap::t1()), &plan).unwrap();
    assert!(a.estimate >= 0.99 && a.estimate <= 1.0 + 1e-6, "{}", a.estimate);
    // the tangent directions cover a half circle, so no unit vector is
    // closer than √2 to both of its endpoints
    let a2 = alpha_f(&e_map(2.0, 0.0).unwrap(), None, &plan).unwrap();
    assert_abs_diff_eq!(a2.estimate, SQRT_2, epsilon = 1e-9);
    let a1 = alpha_f(&e_map(1.0, 0.0).unwrap(), None, &plan).unwrap();
    assert_abs_diff_eq!(a1.estimate, 2.0, epsilon = 1e-9);
    let t = DenseOperator::new(crate::rng::gaussian_matrix(1, 3, 2)).unwrap();
    let lin = alpha_f(&LinearMap::new(t.clone()), Some(&t), &SamplingPlan::default()).unwrap();
    assert_eq!(lin.estimate, 0.0);
}

#[test]
fn certification_algebra_on_catalog() {
    let plan = SamplingPlan::new(4.0, 16, 256, 8, 3).unwrap();
    for entry in catalog() {
        let (f, t) = entry.build().unwrap();
        let s = certify_map(f.as_ref(), &t, &plan).unwrap();
        let b = s.beta.estimate;
        let d = s.delta.estimate;
        assert!(s.alpha.estimate <= b + 1e-12, "{}", entry.name);
        if d < 1.0 {
            assert!(b <= 2.0 * d / (1.0 - d) + 1e-9, "{}", entry.name);
        }
        if let Some(th) = &s.theta {
            assert!((b - 2.0 * (th.estimate / 2.0).sin()).abs() <= 1e-9, "{}", entry.name);
            if b < SQRT_2 {
                assert!(s.min_cosine.unwrap() >= 1.0 - b * b / 2.0 - 1e-12);
            }
        }
        // recorded closed-form values bound the sampled ones from the right side
        for k in f.known_constants() {
            let est = match k.name.as_str() {
                "beta" => b,
                "delta" => d,
                "theta" => s.theta.as_ref().map_or(0.0, |t| t.estimate),
                _ => continue,
            };
            assert!(est <= k.value + 1e-9, "{} {}: {est} > {}", entry.name, k.name, k.value);
        }
    }
}

#[test]
fn enlarging_plan_does_not_decrease_estimates() {
    let (f, t) = catalog().into_iter().find(|e| e.name == "tanh_4").unwrap().build().unwrap();
    let small = SamplingPlan::new(3.0, 8, 64, 0, 5).unwrap();
    let big = SamplingPlan { n_dir: 16, n_pts: 256, ..small.clone() };
    let a = certify_map(f.as_ref(), &t, &small).unwrap();
    let b = certify_map(f.as_ref(), &t, &big).unwrap();
    assert!(b.beta.estimate >= a.beta.estimate);
    assert!(b.delta.estimate >= a.delta.estimate);
    assert!(b.stability.upper >= a.stability.upper);
    assert!(b.stability.lower <= a.stability.lower);
}

#[test]
fn verdicts_for_e2() {
    let e = e_map(2.0, 0.0).unwrap();
    let s = certify_map(&e, &EMap::t1(), &plan_1d(2000, 4.0 * PI)).unwrap();
    assert!(!s.verdict("hilbert_beta_below_sqrt2").unwrap().pass);
    assert!(!s.verdict("bi_lipschitz_beta_below_1").unwrap().pass);
    assert!(s.verdict("stability_lower_positive").unwrap().pass);
    let json = serde_json::to_string(&s).unwrap();
    assert!(json.contains("\"sampled-lower-bound\""));
}

#[test]
fn singular_operator_is_reported() {
    let e = e_map(2.0, 0.0).unwrap();
    let zero = DenseOperator::from_row_slice(2, 1, &[0.0, 0.0]).unwrap();
    assert!(matches!(beta_ft(&e, &zero, &plan_1d(10, 1.0)), Err(Error::NotBoundedBelow(_))));
    let wrong = DenseOperator::identity(2);
    assert!(matches!(beta_ft(&e, &wrong, &plan_1d(10, 1.0)), Err(Error::InvalidInput(_))));
}

#[test]
fn rip_examples() {
    let u3 = SubspaceUnion::sparse(3, 1).unwrap();
    let id = DenseOperator::identity(3);
    assert_eq!(rip_delta(&id, &u3, 2, DEFAULT_ENUM_CAP).unwrap().delta, 0.0);
    let t = DenseOperator::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
    let r = rip_delta(&t, &u3, 2, DEFAULT_ENUM_CAP).unwrap();
    assert_eq!(r.delta, 1.0);
    assert_eq!(r.n_subspaces, 3);
    let d = DenseOperator::from_row_slice(2, 2, &[1.2, 0.0, 0.0, 0.8]).unwrap();
    let r = rip_delta(&d, &SubspaceUnion::sparse(2, 1).unwrap(), 1, DEFAULT_ENUM_CAP).unwrap();
    assert_abs_diff_eq!(r.delta, 0.44, epsilon = 1e-12);
    assert_eq!(r.worst_support, Some(vec![0]));
}

#[test]
fn gamma_examples() {
    let plan = SamplingPlan::new(2.0, 16, 64, 6, 1).unwrap();
    let u = SubspaceUnion::sparse(4, 1).unwrap();
    let t = DenseOperator::new(crate::rng::gaussian_matrix(8, 4, 4) * 0.5).unwrap();
    let lin = LinearMap::new(t.clone());
    assert_eq!(gamma_ka(&lin, &t, &u, 2, &plan, DEFAULT_ENUM_CAP).unwrap().estimate, 0.0);

    let eta = 0.05;
    let f = perturbed_linear(t.clone(), eta, Smooth::Tanh).unwrap();
    let g2 = gamma_ka(&f, &t, &u, 2, &plan, DEFAULT_ENUM_CAP).unwrap();
    let g4 = gamma_ka(&f, &t, &u, 4, &plan, DEFAULT_ENUM_CAP).unwrap();
    assert!(g2.estimate > 0.0);
    assert!(g4.estimate >= g2.estimate);
    assert_eq!(&g4.per_level[..2], &g2.per_level[..]);
    // mean value bound: ‖η(g(Tx+Tz) − g(Tx))‖ ≤ η‖Tz‖ ≤ η‖T‖‖z‖
    assert!(g4.estimate <= eta * t.sigma_max() + 1e-12);
    assert!(g4.estimate <= 2.0 * eta * 2.0);
    assert!(gamma_ka(&f, &t, &u, 2, &plan, 3).is_err());
}

#[test]
fn sparse_riesz_constant_formulas() {
    assert_eq!(sparse_riesz_constants(0.0, 0.0).unwrap(), (1.0, 0.0));
    let (d, b) = sparse_riesz_constants(0.04, 0.1).unwrap();
    let oracle = 1.0 / (1.0 - SQRT_2 * 0.3);
    assert_abs_diff_eq!(d, oracle, epsilon = 1e-12);
    assert_abs_diff_eq!(b, 0.3 * oracle, epsilon = 1e-12);
    assert_abs_diff_eq!(d, 1.73691, epsilon = 1e-5);
    match sparse_riesz_constants(0.25, 0.3) {
        Err(Error::CertificateFailed { margin, .. }) => assert!(margin < 0.0),
        other => panic!("expected refusal, got {other:?}"),
    }

    assert_eq!(almost_linear_constants(0.0, 0.0).unwrap(), (0.0, 0.0));
    let (g1, g2) = almost_linear_constants(0.05, 0.08).unwrap();
    assert_abs_diff_eq!(g1, 0.16, epsilon = 1e-15);
    assert_abs_diff_eq!(g2, 0.26, epsilon = 1e-15);

    assert_eq!(recovery_condition(1.0, 0.0, 0.0, 0.0, 1.0, 1.0).unwrap(), 1.0);
    assert_eq!(recovery_condition(1.0, 0.5, 0.0, 0.0, 1.0, 1.0).unwrap(), 0.5);
    assert!(recovery_condition(2.0, 0.0, 0.3, 0.0, 1.0, 1.0).unwrap() < 0.0);
    assert!(recovery_condition(0.0, 0.0, 0.0, 0.0, 1.0, 1.0).is_err());
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let (f, t) = catalog().into_iter().find(|e| e.name == "companding_3x4").unwrap().build().unwrap();
    let plan = SamplingPlan::new(2.0, 8, 128, 4, 11).unwrap();
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| serde_json::to_string(&certify_map(f.as_ref(), &t, &plan).unwrap()).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn wide_rip_pieces_are_not_bounded_below() {
    let t = DenseOperator::new(DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0])).unwrap();
    let r = rip_delta(&t, &SubspaceUnion::sparse(3, 1).unwrap(), 2, DEFAULT_ENUM_CAP).unwrap();
    assert!(r.delta >= 1.0);
}
