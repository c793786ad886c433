//! End-to-end acceptance checks. Each test prints one PASS/FAIL line with
//! the measured value, the tolerance and the runtime.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chi2norm::bounds::{maclaurin_check, stein_recurrence_rhs, symmetric_mean, theorem_bound, unroll_recurrence, VarianceProfile};
use chi2norm::constants::{
    c_of_p, elementary_inequalities_check, g_max, g_sym_max, h0, h_exact, sandwich_check, sym_sandwich_check, table1,
    IndexSet, Method,
};
use chi2norm::densities::make_uniform;
use chi2norm::distances::{chi2_direct, chi2_series, hermite_profile, hermite_profile_adaptive};
use chi2norm::hermite::{addition_formula_eval, hermite_eval};
use chi2norm::subgaussian::{threshold, ThresholdSet};
use chi2norm::QuadratureSpec;

fn report(id: &str, what: &str, passed: bool, detail: String, elapsed: Duration, budget: Duration) -> bool {
    let in_time = elapsed <= budget;
    let ok = passed && in_time;
    println!(
        "[{}] criterion {id}: {what}: {detail}; runtime {:.2}s (limit {}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    ok
}

#[test]
fn criterion_1_table_of_constants() {
    let start = Instant::now();
    let rows = table1().unwrap();
    let mut worst = 0.0f64;
    let mut all = true;
    for r in &rows {
        let ok = r.matches_reference(2e-4) && r.estimate.certified;
        all &= ok;
        worst = worst.max(r.reference - r.estimate.value);
        println!(
            "    {} n={:2}: C = {:.10} (s* = {}), printed {:.4}, {}",
            r.estimate.set.name(),
            r.n,
            r.estimate.value,
            r.estimate.argmax_s.unwrap(),
            r.reference,
            if ok { "ok" } else { "MISMATCH" }
        );
    }
    let ok = report(
        "1",
        "C_J(1/n), n=2..10, both sets, <= printed and within 2e-4",
        all,
        format!("largest gap {worst:.2e}"),
        start.elapsed(),
        Duration::from_secs(30),
    );
    assert!(ok);
}

#[test]
fn criterion_2_uniform_chi2() {
    let start = Instant::now();
    let spec = QuadratureSpec::default();
    let u = make_uniform();
    let direct = chi2_direct(&u, &spec).unwrap();
    let series = chi2_series(&hermite_profile_adaptive(&u, &spec).unwrap());
    let gap = (direct.value - series.value).abs();
    let allowance = 1e-6 + series.error_estimate + direct.error_estimate;
    let ok = report(
        "2",
        "uniform χ² direct 0.3285 ± 5e-4, series within 1e-6 + tail",
        (direct.value - 0.3285).abs() <= 5e-4 && gap <= allowance,
        format!(
            "direct {:.10}, series {:.10} (N = {}, tail {:.3e}), gap {gap:.3e} <= {allowance:.3e}",
            direct.value,
            series.value,
            series.truncation_order.unwrap(),
            series.error_estimate
        ),
        start.elapsed(),
        Duration::from_secs(2),
    );
    assert!(ok);
}

#[test]
fn criterion_3_subgaussian_thresholds() {
    let start = Instant::now();
    let cases = [
        (ThresholdSet::FirstMoment, 0.5, 1e-9),
        (ThresholdSet::Basic, 0.96116, 1e-4),
        (ThresholdSet::Symmetric, 1.97044, 1e-4),
    ];
    let mut all = true;
    let mut detail = Vec::new();
    for (set, target, tol) in cases {
        let r = threshold(set);
        all &= (r.threshold - target).abs() <= tol;
        detail.push(format!("{} {:.8} ({target} ± {tol:e})", set.name(), r.threshold));
    }
    let ok = report("3", "subgaussian thresholds", all, detail.join(", "), start.elapsed(), Duration::from_secs(2));
    assert!(ok);
}

#[test]
fn criterion_4_maxima_of_g() {
    let start = Instant::now();
    let (a, b) = (g_max(), g_sym_max());
    let ok = report(
        "4",
        "max g = 1.21824 ± 1e-4, max g_sym = 0.58921 ± 1e-4",
        (a.value - 1.21824).abs() <= 1e-4 && (b.value - 0.58921).abs() <= 1e-4,
        format!("max g {:.10} at {:.6}, max g_sym {:.10} at {:.6}", a.value, a.x, b.value, b.x),
        start.elapsed(),
        Duration::from_secs(1),
    );
    assert!(ok);
}

#[test]
fn criterion_5_uniform_sum_bound_soundness() {
    let start = Instant::now();
    let spec = QuadratureSpec::default();
    let u = make_uniform();
    let single = chi2_direct(&u, &spec).unwrap().value;
    let mut all = true;
    for n in 2..=6usize {
        let oracle = chi2_direct(&u.normalized_sum(n).unwrap(), &spec).unwrap();
        let bound = theorem_bound(n, &vec![single; n], true).unwrap();
        let limit = 1.6 / (n * n - 1) as f64;
        let ok = oracle.value <= bound.total + oracle.error_estimate && oracle.value < limit;
        all &= ok;
        println!(
            "    n={n}: oracle χ² {:.6e} <= bound {:.6e}, < 1.6/(n²-1) = {limit:.6e}: {}",
            oracle.value,
            bound.total,
            if ok { "ok" } else { "VIOLATED" }
        );
    }
    let ok = report(
        "5",
        "Irwin-Hall χ² below the symmetric bound and 1.6/(n²-1), n=2..6",
        all,
        "see rows above".into(),
        start.elapsed(),
        Duration::from_secs(180),
    );
    assert!(ok);
}

#[test]
fn criterion_6_stein_recurrence() {
    let start = Instant::now();
    let spec = QuadratureSpec::default();
    let u = make_uniform();
    let order = 24;
    let a = hermite_profile(&u, order, &spec).unwrap();
    let mut worst = 0.0f64;
    for n in [2usize, 3] {
        let leave_out = hermite_profile(&u.normalized_sum(n - 1).unwrap(), order, &spec).unwrap();
        let oracle = hermite_profile(&u.normalized_sum(n).unwrap(), order, &spec).unwrap();
        let variances = VarianceProfile::equal(n).unwrap();
        let (profiles, leaveouts) = (vec![a.clone(); n], vec![leave_out; n]);
        for m in 3..=order {
            let b = stein_recurrence_rhs(&profiles, &variances, &leaveouts, m).unwrap();
            worst = worst.max((b - oracle.values[m]).abs());
        }
    }
    let ok = report(
        "6",
        "recurrence b_m vs oracle quadrature, n=2,3, m=3..24, within 1e-8",
        worst <= 1e-8,
        format!("max difference {worst:.3e}"),
        start.elapsed(),
        Duration::from_secs(120),
    );
    assert!(ok);
}

/// `μ(A)` over all subsets with equality in the recursive hypothesis.
fn subset_induction(values: &[f64], constants: &[f64]) -> f64 {
    let n = values.len();
    let mut mu = vec![0.0; 1 << n];
    for mask in 1usize..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let size = members.len();
        mu[mask] = if size == 1 {
            values[members[0]]
        } else {
            let s1: f64 = members.iter().map(|&k| values[k]).sum();
            let s2: f64 = members.iter().map(|&k| values[k] * mu[mask & !(1 << k)]).sum();
            (s1 + constants[size - 2] * s2) / size as f64
        };
    }
    mu[(1 << n) - 1]
}

fn tuple_mean(values: &[f64], k: usize) -> f64 {
    fn walk(values: &[f64], k: usize, used: &mut [bool], prod: f64, acc: &mut (f64, usize)) {
        if k == 0 {
            acc.0 += prod;
            acc.1 += 1;
            return;
        }
        for i in 0..values.len() {
            if !used[i] {
                used[i] = true;
                walk(values, k - 1, used, prod * values[i], acc);
                used[i] = false;
            }
        }
    }
    let mut acc = (0.0, 0);
    walk(values, k, &mut vec![false; values.len()], 1.0, &mut acc);
    acc.0 / acc.1 as f64
}

#[test]
fn criterion_7_property_suites() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = Vec::new();
    let mut count = |name: &str, cases: usize, bad: usize| {
        println!("    {name}: {cases} cases, {bad} failures");
        if bad > 0 {
            failures.push(name.to_string());
        }
    };

    let bad = (0..1000)
        .filter(|_| {
            let m = rng.gen_range(0..=20usize);
            let (x, y): (f64, f64) = (rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
            let (beta, alpha) = rng.gen_range(0.0..std::f64::consts::TAU).sin_cos();
            let lhs = addition_formula_eval(m, x, y, alpha, beta).unwrap();
            let rhs = hermite_eval(m, alpha * x + beta * y).unwrap();
            let scale: f64 = (0..=m)
                .map(|k| {
                    let c = (1..=k).fold(1.0, |c, i| c * (m + 1 - i) as f64 / i as f64);
                    c * hermite_eval(m - k, x).unwrap().abs()
                        * hermite_eval(k, y).unwrap().abs()
                        * alpha.abs().powi((m - k) as i32)
                        * beta.abs().powi(k as i32)
                })
                .sum();
            (lhs - rhs).abs() > 1e-9 * scale.max(rhs.abs()).max(1.0)
        })
        .count();
    count("addition formula (rel 1e-9)", 1000, bad);

    let bad = (0..10_000)
        .filter(|_| {
            let (s, p) = (rng.gen_range(1..=1000u64), rng.gen_range(1e-4..0.999));
            elementary_inequalities_check(s, p).unwrap() != [true; 3]
        })
        .count();
    count("elementary inequalities", 10_000, bad);

    let bad = (0..10_000)
        .filter(|_| {
            let (s, p) = (rng.gen_range(1..=1000u64), rng.gen_range(1e-6..0.95));
            !(sandwich_check(s, p).unwrap() && sym_sandwich_check(s, p).unwrap())
        })
        .count();
    count("sandwich inequalities", 10_000, bad);

    let bad = (0..1000)
        .filter(|_| {
            let (s, p) = (rng.gen_range(1..=2000u64), rng.gen_range(1e-3..0.95));
            [IndexSet::Basic, IndexSet::Symmetric]
                .into_iter()
                .any(|set| h_exact(set, s, p).unwrap() > h0(set, s, p).unwrap() * (1.0 + 1e-12))
        })
        .count();
    count("h_exact <= h0", 1000, bad);

    let bad = (0..1000)
        .filter(|_| {
            let n = rng.gen_range(1..=8usize);
            let k = rng.gen_range(1..=n);
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
            let brute = tuple_mean(&values, k);
            let fast = symmetric_mean(&values, k).unwrap();
            let mean = values.iter().sum::<f64>() / n as f64;
            (brute - fast).abs() > 1e-12 * brute.max(1.0)
                || !maclaurin_check(&values, k).unwrap()
                || brute > mean.powi(k as i32) + 1e-12
        })
        .count();
    count("Maclaurin vs tuple enumeration", 1000, bad);

    let mut bad = 0;
    for n in 2..=6usize {
        for trial in 0..20 {
            let v = rng.gen_range(0.0..2.0);
            let constants: Vec<f64> = (2..=n).map(|k| rng.gen_range(0.5..3.0) + 0.01 * (k + trial) as f64).collect();
            let a = unroll_recurrence(&vec![v; n], &constants).unwrap();
            let b = subset_induction(&vec![v; n], &constants);
            if (a - b).abs() > 1e-12 * b.max(1.0) {
                bad += 1;
            }
        }
    }
    count("unroll vs subset induction (n<=6)", 100, bad);

    let ok = report(
        "7",
        "property suites",
        failures.is_empty(),
        if failures.is_empty() { "all suites clean".into() } else { format!("failing: {}", failures.join(", ")) },
        start.elapsed(),
        Duration::from_secs(120),
    );
    assert!(ok);
}

#[test]
fn criterion_8_basic_limit_constant() {
    let start = Instant::now();
    let c = c_of_p(IndexSet::Basic, 1e-4, Method::ExactMax).unwrap();
    let ok = report(
        "8a",
        "C_basic(1e-4) in [1.2182 - 1e-3, 1.2183]",
        c.value <= 1.2183 && c.value >= 1.2182 - 1e-3,
        format!("C = {:.10} at s = {}, certified {}", c.value, c.argmax_s.unwrap(), c.certified),
        start.elapsed(),
        Duration::from_secs(5),
    );
    assert!(ok, "C_basic(1e-4) = {} exceeds 1.2183", c.value);
}

#[test]
fn criterion_8_symmetric_limit_constant() {
    let start = Instant::now();
    let c = c_of_p(IndexSet::Symmetric, 1e-4, Method::ExactMax).unwrap();
    let ok = report(
        "8b",
        "C_sym(1e-4) <= 0.5893",
        c.value <= 0.5893,
        format!("C = {:.10} at s = {}, certified {}", c.value, c.argmax_s.unwrap(), c.certified),
        start.elapsed(),
        Duration::from_secs(5),
    );
    assert!(ok);
}
