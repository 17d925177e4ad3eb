//! Acceptance suite. One line per criterion, `[PASS]` or `[FAIL]`, and a
//! nonzero exit status when anything fails.
//!
//! Run with `cargo test --test acceptance` (add `--release` for timings
//! closer to production builds; the limits below hold in both profiles).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI, SQRT_2};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use nlframe::certify::{alpha_f, beta_ft, certify_map, rip_delta, SamplingPlan};
use nlframe::cli::{execute, ExperimentConfig};
use nlframe::maps::{catalog, e_map, perturbed_linear, DifferentiableMap, EMap, FnMap, LinearMap, Smooth};
use nlframe::rng::{gaussian_matrix, orthogonal_matrix};
use nlframe::solvers::{
    fixed_point_iteration, left_inverse_iteration, seeded_contraction, van_cittert_iteration, van_cittert_window,
    IterationConstants, SolverConfig,
};
use nlframe::spaces::{DenseOperator, MatrixNorm, NormSpec, SubspaceUnion, DEFAULT_ENUM_CAP};
use nlframe::sparse::{
    a_a, best_approximator, composed_constants, greedy, sqrt_approx_check, recover, s_a, RecoveryOptions, SparseTriple,
};
use nlframe::Error;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn ok<T>(r: nlframe::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(r: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| r.sample::<f64, _>(StandardNormal))
}

// ---------------------------------------------------------------------------

fn c01_beta_e2() -> Outcome {
    let e = ok(e_map(2.0, 0.0))?;
    let plan = ok(SamplingPlan::new(4.0 * PI, 1, 10_000, 12, 0))?;
    let start = Instant::now();
    let b = ok(beta_ft(&e, &EMap::t1(), &plan))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(b.estimate >= SQRT_2 - 1e-3 && b.estimate <= SQRT_2 + 1e-9, || format!("estimate {}", b.estimate))?;
    ensure(secs < 2.0, || format!("took {secs:.2} s"))?;
    let t = b.witness.as_ref().map(|w| w.x[0].abs()).unwrap_or(0.0);
    ensure(t >= FRAC_PI_2 - 1e-3, || format!("witness |t| = {t}"))?;
    Ok(format!("beta = {:.9} from {} samples, witness |t| = {t:.4}, {secs:.2} s", b.estimate, b.n_samples))
}

fn c02_alpha_einf() -> Outcome {
    let e = ok(e_map(f64::INFINITY, 0.0))?;
    let plan = ok(SamplingPlan::new(4.0 * PI, 1, 4000, 12, 0))?;
    let start = Instant::now();
    let a = ok(alpha_f(&e, Some(&EMap::t1()), &plan))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(a.estimate >= 0.99 && a.estimate <= 1.0 + 1e-6, || format!("estimate {}", a.estimate))?;
    ensure(secs < 5.0, || format!("took {secs:.2} s"))?;
    Ok(format!("alpha = {:.9}, {secs:.2} s", a.estimate))
}

fn c03_stability_envelope() -> Outcome {
    let mut worst = (f64::INFINITY, f64::NEG_INFINITY);
    for p in [1.0, 2.0, f64::INFINITY] {
        for eps in [0.0, FRAC_PI_6] {
            let e = ok(e_map(p, eps))?;
            let norm = if p.is_infinite() { NormSpec::linf() } else { ok(NormSpec::lp(p))? };
            let mut r = rng(1000 + (p.min(9.0) as u64) * 10 + (eps > 0.0) as u64);
            for _ in 0..10_000 {
                let t: f64 = r.random_range(-4.0 * PI..4.0 * PI);
                let dt: f64 = r.random_range(-3.0..3.0);
                if dt == 0.0 {
                    continue;
                }
                // central difference of the curve, independent of the analytic Jacobian
                let h = 1e-6;
                let d = (e.eval(&DVector::from_element(1, t + h)) - e.eval(&DVector::from_element(1, t - h))) / (2.0 * h);
                let jac = e.derivative(&DVector::from_element(1, t));
                ensure((&d - jac.column(0)).amax() < 1e-6, || format!("p={p} eps={eps}: Jacobian mismatch at t={t}"))?;
                let ratio = norm.norm(&(jac.column(0) * dt)) / dt.abs();
                worst = (worst.0.min(ratio), worst.1.max(ratio));
                ensure(ratio >= SQRT_2 / 2.0 - 1e-9 && ratio <= 2.0 + 1e-9, || {
                    format!("p={p} eps={eps} t={t}: ratio {ratio}")
                })?;
            }
        }
    }
    Ok(format!("60000 ratios in [{:.6}, {:.6}]", worst.0, worst.1))
}

fn c04_identity_chain() -> Outcome {
    let t = ok(DenseOperator::new(gaussian_matrix(4, 5, 3)))?;
    let f = LinearMap::new(t.clone());
    let s = ok(certify_map(&f, &t, &SamplingPlan::default()))?;
    let vals = [s.beta.estimate, s.delta.estimate, s.alpha.estimate, s.theta.as_ref().map_or(1.0, |t| t.estimate)];
    ensure(vals.iter().all(|v| v.abs() <= 1e-12), || format!("{vals:?}"))?;
    Ok(format!("beta, delta, alpha, theta = {vals:?}"))
}

fn newton_root(z: f64) -> f64 {
    let mut x = z;
    for _ in 0..100 {
        x -= (x + 0.1 * x.sin() - z) / (1.0 + 0.1 * x.cos());
    }
    x
}

fn c05_rate_law() -> Outcome {
    let t = DenseOperator::identity(1);
    let f = ok(perturbed_linear(t.clone(), 0.1, Smooth::Sin))?;
    let r0 = 1.0 - 0.9 / 1.1;
    let mut worst = 0.0f64;
    let mut worst_err = 0.0f64;
    for truth in [-2.5, 0.4, 2.0, 7.0] {
        let z = f.eval(&DVector::from_element(1, truth));
        let mut cfg = SolverConfig::with_mu(1.0 / 1.1);
        cfg.tol = 1e-14;
        let rep = ok(left_inverse_iteration(&f, &t, &t, &z, &cfg))?;
        let m = rep.max_ratio_above_floor().unwrap_or(0.0);
        worst = worst.max(m);
        ensure(m <= r0 + 1e-9, || format!("truth {truth}: ratio {m} > {r0}"))?;
        let err = (rep.final_point[0] - newton_root(z[0])).abs();
        worst_err = worst_err.max(err);
        ensure(err <= 1e-10, || format!("truth {truth}: error vs root {err}"))?;
    }
    let truth: f64 = 2.0;
    let z = DVector::from_element(1, truth + 0.1 * truth.sin() + 0.01);
    let mut cfg = SolverConfig::with_mu(1.0 / 1.1);
    cfg.truth = Some(vec![truth]);
    let rep = ok(left_inverse_iteration(&f, &t, &t, &z, &cfg))?;
    let noisy = (rep.final_point[0] - truth).abs();
    ensure(noisy <= 0.01 / 0.9 + 1e-6, || format!("noisy error {noisy}"))?;
    Ok(format!("max ratio {worst:.6} <= r0 {r0:.6}, root error {worst_err:.1e}, noisy error {noisy:.6} <= {:.6}", 0.01 / 0.9))
}

fn c06_window_and_bound() -> Outcome {
    let t = ok(DenseOperator::new(DMatrix::identity(4, 4) + gaussian_matrix(41, 4, 4) * 0.2))?;
    let f = ok(perturbed_linear(t.clone(), 0.05, Smooth::Tanh))?;
    let c = ok(IterationConstants::sample(&f, &t, &SamplingPlan::default()))?;
    let window = van_cittert_window(&c, &t);
    let truth = DVector::from_vec(vec![0.5, -1.0, 0.25, 2.0]);
    let mut r = rng(6);
    let noise = {
        let g = gaussian(&mut r, 4);
        &g * (1e-2 / g.norm())
    };
    let z = f.eval(&truth) + &noise;
    let mut details = Vec::new();
    for frac in [0.25, 0.5, 0.9] {
        let mut cfg = SolverConfig::with_mu(frac * window);
        cfg.truth = Some(truth.iter().copied().collect());
        cfg.constants = Some(c.clone());
        let rep = ok(van_cittert_iteration(&f, &t, &z, &cfg))?;
        ensure(rep.converged, || format!("mu = {frac} window did not converge"))?;
        let (m, b) = (rep.measured_error.unwrap().l2, rep.error_bound.unwrap().value);
        ensure(m <= b, || format!("mu = {frac} window: error {m} > bound {b}"))?;
        details.push(format!("{m:.2e}<={b:.2e}"));
    }
    // refusal on the U-shaped curve, through the library and the binary
    let e = ok(e_map(2.0, 0.0))?;
    let zc = e.eval(&DVector::from_element(1, 0.3));
    let err = van_cittert_iteration(&e, &EMap::t1(), &zc, &SolverConfig::with_mu(0.1)).unwrap_err();
    ensure(matches!(err, Error::CertificateFailed { .. }) && err.exit_code() == 3, || format!("{err}"))?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    fs::write(dir.path().join("z.csv"), format!("{}\n{}\n", zc[0], zc[1])).map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_nlframe"))
        .args(["solve", "--algo", "van-cittert", "--map", "e_map(p=2,eps=0)", "--data", "z.csv", "--mu", "0.1"])
        .current_dir(dir.path())
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.code() == Some(3), || format!("binary exit {:?}", out.status.code()))?;
    Ok(format!("window (0, {window:.4}); errors vs bounds {}; E_(2,0) refused, exit 3", details.join(", ")))
}

fn c07_dual_norm() -> Outcome {
    let q = ok(seeded_contraction(8, 0.8, 1.2, 3))?;
    let (s2, sinf) = (MatrixNorm::Spectral.of(&q), MatrixNorm::MaxRowSum.of(&q));
    ensure((s2 - 0.8).abs() < 1e-9 && sinf >= 1.1, || format!("|Q|_2 {s2}, |Q|_inf {sinf}"))?;
    let c = DVector::from_fn(8, |i, _| 1.0 - 0.25 * i as f64);
    let (qq, cc) = (q.clone(), c.clone());
    let g = FnMap::new("affine", 8, 8, move |x| &qq * x + &cc).with_jacobian(move |_| q.clone());
    let mut finals = Vec::new();
    let mut r1 = 0.0f64;
    for start in [4.0, -7.0] {
        let mut cfg = SolverConfig::default();
        cfg.initial = Some(vec![start; 8]);
        let rep = ok(fixed_point_iteration(&g, &cfg, MatrixNorm::MaxRowSum, MatrixNorm::Spectral, NormSpec::linf()))?;
        ensure(rep.converged, || "no convergence in the max norm".into())?;
        let d = rep.decay.clone().ok_or("no decay fit")?;
        r1 = r1.max(d.r1);
        finals.push(rep.final_point());
    }
    let gap = (&finals[0] - &finals[1]).amax();
    ensure(r1 < 0.95, || format!("fitted r1 {r1}"))?;
    ensure(gap <= 1e-8, || format!("starts differ by {gap}"))?;
    Ok(format!("|Q|_2 = {s2:.3}, |Q|_inf = {sinf:.3}, fitted r1 = {r1:.4}, starts agree to {gap:.1e}"))
}

fn c08_rip() -> Outcome {
    let t = ok(DenseOperator::new(gaussian_matrix(8, 4, 8) / 2.0))?;
    let u = ok(SubspaceUnion::sparse(8, 1))?;
    let start = Instant::now();
    let rep = ok(rip_delta(&t, &u, 2, DEFAULT_ENUM_CAP))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(rep.n_subspaces == 28, || format!("{} supports", rep.n_subspaces))?;
    // brute-force Rayleigh quotients on each 2-sparse support
    let mut r = rng(8);
    let mut brute = 0.0f64;
    for i in 0..8 {
        for j in (i + 1)..8 {
            let cols = DMatrix::from_columns(&[t.matrix().column(i), t.matrix().column(j)]);
            for _ in 0..10_000 {
                let z = gaussian(&mut r, 2);
                let z = &z / z.norm();
                let q = (&cols * z).norm_squared();
                brute = brute.max((q - 1.0).max(1.0 - q));
            }
        }
    }
    ensure(brute <= rep.delta + 1e-12 && rep.delta - brute <= 1e-6, || format!("exact {} brute {brute}", rep.delta))?;
    ensure(secs < 1.0, || format!("took {secs:.3} s"))?;
    let deg = ok(DenseOperator::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]))?;
    let d = ok(rip_delta(&deg, &ok(SubspaceUnion::sparse(3, 1))?, 2, DEFAULT_ENUM_CAP))?;
    ensure(d.delta == 1.0, || format!("degenerate delta {}", d.delta))?;
    Ok(format!("delta_2A = {:.9}, brute force {brute:.9}, {secs:.3} s; degenerate delta = 1", rep.delta))
}

fn c09_classical_constants() -> Outcome {
    let triple = ok(SparseTriple::classical(6, 2))?;
    let plan = SamplingPlan::default();
    let s = ok(s_a(&triple, &plan))?;
    ensure(s.value == 2.0, || format!("s_A = {}", s.value))?;
    let a = ok(a_a(&triple, &plan))?;
    ensure(a.estimate >= 0.45 && a.estimate <= 0.5 + 1e-9, || format!("a_A = {}", a.estimate))?;
    Ok(format!("s_A = {} ({:?}), a_A estimate {:.9} from {} samples", s.value, s.provenance, a.estimate, a.n_samples))
}

/// Best k-term ℓ1 error: the sum of all but the k largest magnitudes.
fn sigma_k_l1(x: &DVector<f64>, k: usize) -> f64 {
    let mut m: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    m.sort_by(|a, b| b.partial_cmp(a).unwrap());
    m.iter().skip(k).sum()
}

fn c10_greedy() -> Outcome {
    let triple = ok(SparseTriple::classical(8, 2))?;
    let mut r = rng(10);
    let mut defect = 0.0f64;
    let mut gap = 0.0f64;
    for _ in 0..100 {
        let x = gaussian(&mut r, 8);
        let tr = ok(greedy(&x, &triple, 4))?;
        defect = defect.max(tr.telescoping_defect);
        ensure(tr.errors.windows(2).all(|w| w[1] <= w[0] + 1e-12), || "errors increase".into())?;
        ensure(*tr.errors.last().unwrap() <= 1e-12, || "errors do not reach 0".into())?;
        for (k, e) in tr.errors.iter().enumerate() {
            gap = gap.max((e - sigma_k_l1(&x, 2 * k)).abs());
        }
        // keep the two largest entries as an independent best approximator
        let mut idx: Vec<usize> = (0..8).collect();
        idx.sort_by(|&a, &b| x[b].abs().partial_cmp(&x[a].abs()).unwrap());
        let mut best = DVector::zeros(8);
        for &i in &idx[..2] {
            best[i] = x[i];
        }
        let lib = ok(best_approximator(&x, &triple))?;
        ensure((&lib - &best).amax() == 0.0, || "best approximator mismatch".into())?;
        let p = ok(sqrt_approx_check(&x, &triple, 0.5))?;
        let lhs = (&x - &best).norm();
        ensure(p.pass && lhs <= 0.5f64.sqrt() * x.lp_norm(1) + 1e-12, || format!("{lhs} vs {}", p.rhs))?;
    }
    ensure(defect <= 1e-10, || format!("telescoping defect {defect}"))?;
    ensure(gap <= 1e-10, || format!("greedy vs best k-term gap {gap}"))?;
    Ok(format!("100 samples: telescoping defect {defect:.1e}, |err - sigma_kA| <= {gap:.1e}, square-root inequality holds"))
}

fn c11_linear_recovery() -> Outcome {
    let f = LinearMap::new(DenseOperator::identity(3));
    let triple = ok(SparseTriple::classical(3, 1))?;
    let x0 = DVector::from_vec(vec![3.0, 0.0, 0.0]);
    let opts = RecoveryOptions { truth: Some(x0.iter().copied().collect()), ..Default::default() };
    let r = ok(recover(&f, &x0, 0.1, &triple, None, &opts))?;
    let err = (r.point() - &x0).norm();
    ensure(r.certified_global && err <= 0.3 + 1e-9, || format!("error {err}"))?;
    let r0 = ok(recover(&f, &x0, 0.0, &triple, None, &opts))?;
    ensure(r0.point() == x0, || format!("eps = 0 gives {:?}", r0.point))?;
    // the same instance through the bundled config
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples");
    let c = ok(ExperimentConfig::load(dir.join("linear_recovery.toml")))?;
    let rep = ok(execute(&c, &dir))?;
    let m = rep.report.recovery().and_then(|r| r.measured).ok_or("no measured error")?;
    ensure(m.h <= 0.3 + 1e-9, || format!("config error {}", m.h))?;
    Ok(format!("error {err:.6} <= 0.3, exact at eps = 0, predicted H bound {:.3}", r.predicted.map_or(f64::NAN, |p| p.h)))
}

/// Seeds tried for the 6x12 Gaussian instance.
const GAUSSIAN_SEEDS: std::ops::Range<u64> = 0..40;

fn c12_composed_pipeline() -> Outcome {
    let eta = 1e-3;
    let triple = ok(SparseTriple::classical(12, 1))?;
    let u = triple.union().clone();
    // the hypothesis is at least (√2 + 1)√δ₂ because a_A s_A = 1 and the γ terms are nonnegative
    let mut best = (f64::INFINITY, 0u64);
    for seed in GAUSSIAN_SEEDS {
        let t = ok(DenseOperator::new(gaussian_matrix(seed, 6, 12) / 6f64.sqrt()))?;
        let d2 = ok(rip_delta(&t, &u, 2, DEFAULT_ENUM_CAP))?.delta;
        let lower = (SQRT_2 + 1.0) * d2.sqrt();
        if lower < best.0 {
            best = (lower, seed);
        }
    }
    let satisfiable = best.0 < 1.0;
    let (seed, lower) = (best.1, best.0);
    let t = ok(DenseOperator::new(gaussian_matrix(seed, 6, 12) / 6f64.sqrt()))?;
    let f = ok(perturbed_linear(t.clone(), eta, Smooth::Tanh))?;
    let plan = SamplingPlan { box_radius: 1.0, n_pts: 128, ..Default::default() };
    let c = ok(composed_constants(&f, &t, &triple, &plan, DEFAULT_ENUM_CAP))?;
    let mut x0 = DVector::zeros(12);
    x0[2] = 1.0;
    let opts = RecoveryOptions { truth: Some(x0.iter().copied().collect()), plan: plan.clone(), ..Default::default() };
    let r = ok(recover(&f, &f.eval(&x0), 0.01, &triple, Some(&t), &opts))?;
    let primary = if satisfiable {
        ensure(c.applicable && r.bounds_hold() == Some(true), || "bounds fail on a satisfiable seed".into())?;
        format!("seed {seed} satisfies the hypothesis; bounds hold")
    } else {
        // negative control: the gate refuses and no bound is claimed
        let refused = matches!(c.require(), Err(Error::CertificateFailed { .. }));
        ensure(refused && !c.applicable, || "gate did not refuse".into())?;
        ensure(!r.applicable && r.predicted.is_none(), || "recovery claimed a bound".into())?;
        ensure(r.note.as_deref().is_some_and(|n| n.contains("inapplicable")), || "no refusal note".into())?;
        format!(
            "no seed in {}..{} satisfies the hypothesis (best seed {seed}: >= {lower:.3}, composed {:.3}); refusal path asserted",
            GAUSSIAN_SEEDS.start, GAUSSIAN_SEEDS.end, c.hypothesis.value
        )
    };
    // positive instance with an orthogonal T so the bounds are exercised too
    let t = ok(DenseOperator::new(orthogonal_matrix(5, 12)))?;
    let f = ok(perturbed_linear(t.clone(), 0.01, Smooth::Tanh))?;
    let mut x0 = DVector::zeros(12);
    x0[4] = 0.8;
    x0[9] = 0.05;
    let opts = RecoveryOptions { truth: Some(x0.iter().copied().collect()), ..Default::default() };
    let r = ok(recover(&f, &f.eval(&x0), 0.02, &triple, Some(&t), &opts))?;
    let (m, p) = (r.measured.ok_or("no measured error")?, r.predicted.ok_or("no prediction")?);
    ensure(r.applicable && m.h <= p.h && m.m <= p.m, || format!("{m:?} vs {p:?}"))?;
    Ok(format!("{primary}; orthogonal 12x12 instance: H {:.4} <= {:.4}, M {:.4} <= {:.4}", m.h, p.h, m.m, p.m))
}

fn c13_certification_algebra() -> Outcome {
    let plan = ok(SamplingPlan::new(4.0, 16, 256, 8, 3))?;
    let mut n = 0;
    for entry in catalog() {
        let (f, t) = ok(entry.build())?;
        let s = ok(certify_map(f.as_ref(), &t, &plan))?;
        let (a, b, d) = (s.alpha.estimate, s.beta.estimate, s.delta.estimate);
        ensure(a <= b + 1e-12, || format!("{}: alpha {a} > beta {b}", entry.name))?;
        if d < 1.0 {
            ensure(b <= 2.0 * d / (1.0 - d) + 1e-9, || format!("{}: beta {b} vs delta {d}", entry.name))?;
        }
        if let Some(th) = &s.theta {
            let gap = (b - 2.0 * (th.estimate / 2.0).sin()).abs();
            ensure(gap <= 1e-9, || format!("{}: beta vs theta gap {gap}", entry.name))?;
        }
        n += 1;
    }
    Ok(format!("{n} catalog instances"))
}

const DETERMINISM_CONFIG: &str = r#"
name = "determinism"
task = "solve"
[map]
kind = "perturbed_linear"
eta = 0.05
g = "tanh"
operator = { source = "random", rows = 6, cols = 4, dist = "orthogonal" }
[plan]
n_pts = 256
n_dir = 16
refine_rounds = 4
[solver]
algo = "van_cittert"
mu = 0.3
[data]
truth = [0.3, -1.2, 0.8, 0.05]
noise = { norm = "l2", magnitude = 0.01 }
"#;

fn c14_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    fs::write(dir.path().join("c.toml"), DETERMINISM_CONFIG).map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for (out, threads) in [("a", "1"), ("b", "4"), ("c", "2")] {
        let o = Command::new(env!("CARGO_BIN_EXE_nlframe"))
            .args(["--threads", threads, "run", "c.toml", "--out-dir", out])
            .env("NLFRAME_SEED", "2024")
            .current_dir(dir.path())
            .output()
            .map_err(|e| e.to_string())?;
        ensure(o.status.success(), || String::from_utf8_lossy(&o.stderr).into_owned())?;
        reports.push(fs::read(dir.path().join(out).join("report.json")).map_err(|e| e.to_string())?);
    }
    ensure(reports.windows(2).all(|w| w[0] == w[1]), || "reports differ".into())?;
    Ok(format!("3 runs (1, 4, 2 threads) with seed 2024: {} identical bytes", reports[0].len()))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("beta of E_(2,0) is sqrt(2)", c01_beta_e2),
        ("alpha of E_(inf,0) is 1", c02_alpha_einf),
        ("E_(p,eps) stability envelope", c03_stability_envelope),
        ("identity chain: F = T gives zero constants", c04_identity_chain),
        ("left-inverse rate law", c05_rate_law),
        ("Van Cittert window, bound and refusal", c06_window_and_bound),
        ("dual-norm fixed-point convergence", c07_dual_norm),
        ("RIP exactness", c08_rip),
        ("classical triple constants", c09_classical_constants),
        ("greedy laws", c10_greedy),
        ("linear sparse recovery end to end", c11_linear_recovery),
        ("composed recovery pipeline", c12_composed_pipeline),
        ("certification algebra on the catalog", c13_certification_algebra),
        ("determinism of run", c14_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of 14 criteria pass", 14 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
