//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shiftlab::beurling::{algebra_constant, divide_by_z_minus_1, multiply, AlgebraKernel, CoefficientSeries};
use shiftlab::operator::{eigenvector_f1, jordan_chain};
use shiftlab::stability::{
    beurling_index_sweep, norm_stability_run, random_zero_sets, semicontinuity_run, NormStabilityConfig,
    PerturbationKind, PerturbationPlan, SemicontinuitySetup,
};
use shiftlab::subspace::{basis_perturbation_probe, SubspaceBasis};
use shiftlab::weights::{classify, DivergenceVerdict, WeightSequence};
use shiftlab::Complex64;

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Shift weights written out from their closed forms.
fn oracle_alpha(w: &WeightSequence, n: usize) -> f64 {
    let n = n as f64;
    match w {
        WeightSequence::Unweighted => 1.0,
        WeightSequence::Bergman => ((n + 1.0) / (n + 2.0)).sqrt(),
        WeightSequence::QuasianalyticSqrt => ((n + 1.0).sqrt() - n.sqrt()).exp(),
        WeightSequence::Explicit(_) => unreachable!(),
    }
}

/// `π_n` in closed form.
fn oracle_pi(w: &WeightSequence, n: usize) -> f64 {
    let n = n as f64;
    match w {
        WeightSequence::Unweighted => 1.0,
        WeightSequence::Bergman => 1.0 / (n + 1.0).sqrt(),
        WeightSequence::QuasianalyticSqrt => n.sqrt().exp(),
        WeightSequence::Explicit(_) => unreachable!(),
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn chain_residuals_and_closed_form() -> Outcome {
    let n = 400;
    let mut worst_link = 0.0f64;
    let mut worst_gamma = 0.0f64;
    for w in [WeightSequence::Unweighted, WeightSequence::Bergman, WeightSequence::QuasianalyticSqrt] {
        let alpha: Vec<f64> = (0..n).map(|k| oracle_alpha(&w, k)).collect();
        for lambda in [c(0.3, 0.0), c(0.0, 0.5), c(-0.6, 0.0)] {
            let chain = jordan_chain(&w, lambda, 3, n).map_err(|e| e.to_string())?;
            let f: Vec<Vec<Complex64>> = chain.vectors.iter().map(|v| v.iter().copied().collect()).collect();
            for k in 0..f.len() {
                // (T* − λ) f_{k+1} − f_k on the coordinates the window determines
                let r: Vec<Complex64> = (0..n - 1)
                    .map(|i| {
                        let prev = if k == 0 { c(0.0, 0.0) } else { f[k - 1][i] };
                        alpha[i] * f[k][i + 1] - lambda * f[k][i] - prev
                    })
                    .collect();
                let scale = if k == 0 { norm(&f[0]) } else { norm(&f[k - 1]) };
                worst_link = worst_link.max(norm(&r) / scale);
            }
            for (i, &got) in f[1].iter().enumerate().take(n).skip(1) {
                let gamma = lambda.powu(i as u32 - 1) * (i as f64) / oracle_pi(&w, i);
                let rel = (got - gamma).norm() / gamma.norm();
                worst_gamma = worst_gamma.max(rel);
            }
        }
    }
    check(
        worst_link <= 1e-10 && worst_gamma <= 1e-12,
        format!("max relative link residual {worst_link:.2e} (<= 1e-10), max gamma error {worst_gamma:.2e} (<= 1e-12)"),
    )
}

fn eigenvector_norm_oracles() -> Outcome {
    let n = 400;
    let u = eigenvector_f1(&WeightSequence::Unweighted, c(0.6, 0.0), n).map_err(|e| e.to_string())?;
    let b = eigenvector_f1(&WeightSequence::Bergman, c(0.5, 0.0), n).map_err(|e| e.to_string())?;
    // Σ 0.36^k = 1/(1 − 0.36) and Σ (k+1) 0.25^k = 1/(1 − 0.25)²
    let du = (u.norm_sqr(0) - 1.0 / (1.0 - 0.36)).abs();
    let db = (b.norm_sqr(0) - 1.0 / (0.75f64 * 0.75)).abs();
    check(
        du <= 1e-9 && db <= 1e-9,
        format!("unweighted |f|^2 = {:.12} (err {du:.1e}), bergman |f|^2 = {:.12} (err {db:.1e})", u.norm_sqr(0), b.norm_sqr(0)),
    )
}

fn norm_stability_over_seeds() -> Outcome {
    let cfg = NormStabilityConfig {
        roots: vec![c(0.3, 0.0), c(-0.4, 0.0)],
        n: 200,
        tol: 1e-8,
        trial: 0,
    };
    let mut failures = Vec::new();
    let mut errors = 0;
    let (mut lo, mut hi, mut worst_ratio) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for seed in 1..=20u64 {
        let plan = PerturbationPlan::decades(PerturbationKind::DenseRandom, 5, seed);
        match norm_stability_run(&WeightSequence::Bergman, &plan, &cfg) {
            Ok(r) => {
                let slope = r.fitted_slope.unwrap_or(f64::NAN);
                let last = r.per_step.last().expect("five steps").metrics["distance"];
                lo = lo.min(slope);
                hi = hi.max(slope);
                worst_ratio = worst_ratio.max(last / 1e-5);
                if !((0.9..=1.1).contains(&slope) && last <= 10.0 * 1e-5) {
                    failures.push(seed);
                }
            }
            Err(_) => errors += 1,
        }
    }
    check(
        failures.is_empty() && errors == 0,
        format!("20 seeds: slopes in [{lo:.4}, {hi:.4}], final distance <= {worst_ratio:.3}·eps_min, reconstruction failures {errors}, failing seeds {failures:?}"),
    )
}

fn beurling_index_random_sets() -> Outcome {
    let sets = random_zero_sets(50, 11, 1e-2);
    let ok_sets = sets.iter().all(|s| {
        !s.is_empty()
            && s.len() <= 5
            && s.iter().all(|z| z.norm() <= 0.8)
            && s.iter().enumerate().all(|(i, a)| s[..i].iter().all(|b| (a - b).norm() >= 1e-2))
    });
    let r = beurling_index_sweep(&sets, 128, 1e-8).map_err(|e| e.to_string())?;
    let bad = r
        .per_step
        .iter()
        .filter(|s| s.metrics["index"] != 1.0 || s.metrics["gap"] < 1e3)
        .count();
    let min_gap = r.per_step.iter().map(|s| s.metrics["gap"]).fold(f64::INFINITY, f64::min);
    check(
        ok_sets && bad == 0,
        format!("50 zero sets: {bad} with index != 1 or gap < 1e3, smallest gap {min_gap:.2e}"),
    )
}

fn semicontinuity_setup() -> (SemicontinuitySetup, PerturbationPlan) {
    (
        SemicontinuitySetup {
            blocks: 1,
            n: 64,
            zeros: vec![c(0.3, 0.0), c(0.0, -0.4)],
            trials: 200,
            tol: 1e-8,
        },
        PerturbationPlan::halving(PerturbationKind::WeightJitter, 14, 7),
    )
}

fn semicontinuity_no_violations() -> Outcome {
    let (setup, plan) = semicontinuity_setup();
    let r = semicontinuity_run(&WeightSequence::Unweighted, &setup, &plan).map_err(|e| e.to_string())?;
    let violations = r.summary["violations"].as_u64().unwrap_or(u64::MAX);
    let skipped = r.summary["skipped_fraction"].as_f64().unwrap_or(1.0);
    check(
        violations == 0 && skipped <= 0.1,
        format!("200 trials x 14 steps: {violations} violations, skipped fraction {skipped:.3}"),
    )
}

fn kernel_sum_running_maxima() -> Outcome {
    let n = 10_000;
    let a = algebra_constant(AlgebraKernel::Displayed, n).map_err(|e| e.to_string())?;
    let head_ok = a.running_max[..3] == [1.0, 2.0, 2.5625];
    let target = PI * PI / 3.0;
    let gap = (a.running_max[n] - target).abs();
    // with a + b = n + 2: 1/(ab) = (1/a + 1/b)/(n + 2), squared and summed
    let m = (n + 2) as f64;
    let (h1, h2) = (1..=n + 1).fold((0.0, 0.0), |(h1, h2), j| (h1 + 1.0 / j as f64, h2 + 1.0 / (j * j) as f64));
    let oracle = ((n + 1) as f64 / m).powi(2) * (2.0 * h2 + 4.0 * h1 / m);
    let oracle_err = (a.sums[n] - oracle).abs();
    check(
        head_ok && gap <= 1e-3 && oracle_err <= 1e-12,
        format!(
            "running maxima at n = 0,1,2: {:?}; running max at n = 1e4 is {:.6} (|diff from pi^2/3| = {gap:.2e}, need <= 1e-3); sum at n = 1e4 is {:.6} (closed form {oracle:.6})",
            &a.running_max[..3],
            a.running_max[n],
            a.sums[n]
        ),
    )
}

fn division_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let d = rng.random_range(0..=64);
        let coeffs: Vec<f64> = (0..=d).map(|_| rng.random_range(-50..=50) as f64).collect();
        let g = CoefficientSeries::from_real(&coeffs);
        let f = divide_by_z_minus_1(&g);
        let back = multiply(&CoefficientSeries::z_minus_one(), &f).add(&CoefficientSeries::new(vec![g.eval(c(1.0, 0.0))]));
        for (k, &a) in coeffs.iter().enumerate() {
            worst = worst.max((back.coeff(k) - c(a, 0.0)).norm());
        }
    }
    check(worst <= 1e-12, format!("1000 integer polynomials, max coefficient error {worst:.1e}"))
}

fn classifier_verdicts() -> Outcome {
    let n = 4096;
    let qa = classify(&WeightSequence::QuasianalyticSqrt, n).map_err(|e| e.to_string())?;
    let un = classify(&WeightSequence::Unweighted, n).map_err(|e| e.to_string())?;
    let be = classify(&WeightSequence::Bergman, n).map_err(|e| e.to_string())?;
    let slope = qa.growth_slope.unwrap_or(f64::NAN);
    check(
        qa.divergence_verdict == DivergenceVerdict::Diverges
            && slope >= 0.1
            && un.divergence_verdict == DivergenceVerdict::Converges
            && be.divergence_verdict == DivergenceVerdict::Converges
            && qa.shields_hypotheses_met,
        format!(
            "quasianalytic_sqrt {:?} (slope {slope:.3}, hypotheses {}), unweighted {:?}, bergman {:?}",
            qa.divergence_verdict, qa.shields_hypotheses_met, un.divergence_verdict, be.divergence_verdict
        ),
    )
}

fn basis_perturbation_slope() -> Outcome {
    let deltas = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let bases = [
        SubspaceBasis::vanishing_polynomials(&[c(0.3, 0.1), c(-0.5, 0.0)], 24).map_err(|e| e.to_string()),
        SubspaceBasis::vanishing_polynomials(&[c(0.0, 0.7)], 12).map_err(|e| e.to_string()),
        jordan_chain(&WeightSequence::Bergman, c(0.5, 0.0), 3, 40)
            .map_err(|e| e.to_string())
            .and_then(|ch| SubspaceBasis::from_vectors(40, &ch.vectors).map_err(|e| e.to_string())),
    ];
    let mut slopes = Vec::new();
    for (i, b) in bases.into_iter().enumerate() {
        let b = b?;
        let probe = basis_perturbation_probe(&b, &deltas, 100 + i as u64).map_err(|e| e.to_string())?;
        slopes.push(probe.slope.unwrap_or(f64::NAN));
    }
    check(
        slopes.iter().all(|s| (s - 1.0).abs() <= 0.1),
        format!("fitted slopes {slopes:.4?}"),
    )
}

fn reruns_are_byte_identical() -> Outcome {
    let cfg = NormStabilityConfig {
        roots: vec![c(0.3, 0.0), c(-0.4, 0.0)],
        n: 120,
        tol: 1e-8,
        trial: 0,
    };
    let plan = PerturbationPlan::decades(PerturbationKind::DenseRandom, 5, 42);
    let norm = || norm_stability_run(&WeightSequence::Bergman, &plan, &cfg).and_then(|r| r.to_json());
    let (setup, semi_plan) = semicontinuity_setup();
    let setup = SemicontinuitySetup { trials: 40, ..setup };
    let semi = || semicontinuity_run(&WeightSequence::Unweighted, &setup, &semi_plan).and_then(|r| r.to_json());
    let sets = random_zero_sets(20, 5, 1e-2);
    let sweep = || beurling_index_sweep(&sets, 64, 1e-8).and_then(|r| r.to_json());
    let mut same = Vec::new();
    for run in [&norm as &dyn Fn() -> shiftlab::Result<String>, &semi, &sweep] {
        let a = run().map_err(|e| e.to_string())?;
        let b = run().map_err(|e| e.to_string())?;
        same.push(a == b);
    }
    check(
        same.iter().all(|&s| s),
        format!("norm stability / semicontinuity / index sweep identical: {same:?}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("jordan chain residuals and closed-form second vector", chain_residuals_and_closed_form),
        ("eigenvector norms against geometric series", eigenvector_norm_oracles),
        ("invariant subspace recovery under dense perturbation", norm_stability_over_seeds),
        ("index one on zero-based subspaces", beurling_index_random_sets),
        ("index semicontinuity under weight jitter", semicontinuity_no_violations),
        ("displayed kernel sum: running maxima and limit", kernel_sum_running_maxima),
        ("division by z - 1 identity", division_identity),
        ("weight classifier verdicts", classifier_verdicts),
        ("projection distance is first order in basis perturbation", basis_perturbation_slope),
        ("determinism of seeded runs", reruns_are_byte_identical),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{:>2}] {name} ({secs:.1}s): {detail}", i + 1)
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
