//! The tiered invariant suite behind `verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chi2norm::bounds::{
    constant_sequence, maclaurin_check, stein_recurrence_rhs, theorem_bound, unroll_recurrence, VarianceProfile,
};
use chi2norm::constants::{
    c_of_p, elementary_inequalities_check, g_max, g_sym_max, h0, h_exact, proof_maxima, r3_readings,
    sandwich_check, sym_sandwich_check, table1, IndexSet,
};
use chi2norm::densities::make_uniform;
use chi2norm::distances::{chi2_direct, chi2_series, hermite_profile};
use chi2norm::hermite::{addition_formula_eval, hermite_eval};
use chi2norm::subgaussian::{mgf_check, symmetric_t_grid, threshold};
use chi2norm::{ConstantMethod, StandardizedDensity, ThresholdSet};

use crate::commands::{profile_for, AGREEMENT_SLACK};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Report, Table, Value};

pub const STEIN_TOLERANCE: f64 = 1e-8;
pub const PARSEVAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub tier: u8,
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub target: String,
}

impl Check {
    fn new(tier: u8, name: impl Into<String>, passed: bool, value: Option<f64>, target: impl Into<String>) -> Self {
        Check {
            tier,
            name: name.into(),
            passed,
            value,
            target: target.into(),
        }
    }
}

fn within(tier: u8, name: &str, value: f64, target: f64, tol: f64) -> Check {
    Check::new(
        tier,
        name,
        (value - target).abs() <= tol,
        Some(value),
        format!("{target} ± {tol:e}"),
    )
}

/// Counts failures of `f` over `cases` draws; returns the check.
fn fuzz(tier: u8, name: &str, cases: usize, rng: &mut ChaCha8Rng, mut f: impl FnMut(&mut ChaCha8Rng) -> bool) -> Check {
    let failures = (0..cases).filter(|_| !f(rng)).count();
    Check::new(
        tier,
        name,
        failures == 0,
        Some(failures as f64),
        format!("0 failures in {cases} cases"),
    )
}

fn tier1(cfg: &RunConfig) -> Result<Vec<Check>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = vec![
        within(1, "hermite He_4(2)", hermite_eval(4, 2.0)?, -5.0, 1e-12),
        within(1, "max g", g_max().value, 1.21824, 1e-4),
        within(1, "max g_sym", g_sym_max().value, 0.58921, 1e-4),
        within(1, "threshold first", threshold(ThresholdSet::FirstMoment).threshold, 0.5, 1e-9),
        within(1, "threshold basic", threshold(ThresholdSet::Basic).threshold, 0.96116, 1e-4),
        within(1, "threshold sym", threshold(ThresholdSet::Symmetric).threshold, 1.97044, 1e-4),
    ];

    out.push(fuzz(1, "addition formula", 1000, &mut rng, |r| {
        let m = r.gen_range(0..=20usize);
        let (x, y) = (r.gen_range(-4.0..4.0), r.gen_range(-4.0..4.0));
        let (beta, alpha) = r.gen_range(0.0..std::f64::consts::TAU).sin_cos();
        let lhs = addition_formula_eval(m, x, y, alpha, beta).unwrap_or(f64::NAN);
        let rhs = hermite_eval(m, alpha * x + beta * y).unwrap_or(f64::NAN);
        let scale: f64 = (0..=m)
            .map(|k| {
                let c = (1..=k).fold(1.0, |c, i| c * (m + 1 - i) as f64 / i as f64);
                c * hermite_eval(m - k, x).unwrap_or(f64::NAN).abs()
                    * hermite_eval(k, y).unwrap_or(f64::NAN).abs()
                    * alpha.abs().powi((m - k) as i32)
                    * beta.abs().powi(k as i32)
            })
            .sum();
        (lhs - rhs).abs() <= 1e-9 * scale.max(rhs.abs()).max(1.0)
    }));
    out.push(fuzz(1, "elementary inequalities", 10_000, &mut rng, |r| {
        let (s, p) = (r.gen_range(1..=1000u64), r.gen_range(1e-4..0.999));
        elementary_inequalities_check(s, p).map_or(false, |v| v == [true; 3])
    }));
    out.push(fuzz(1, "sandwich bounds", 10_000, &mut rng, |r| {
        let (s, p) = (r.gen_range(1..=1000u64), r.gen_range(1e-6..0.95));
        sandwich_check(s, p).unwrap_or(false) && sym_sandwich_check(s, p).unwrap_or(false)
    }));
    out.push(fuzz(1, "h <= h0", 1000, &mut rng, |r| {
        let (s, p) = (r.gen_range(1..=2000u64), r.gen_range(1e-3..0.95));
        [IndexSet::Basic, IndexSet::Symmetric].into_iter().all(|set| {
            match (h_exact(set, s, p), h0(set, s, p)) {
                (Ok(h), Ok(bound)) => h <= bound * (1.0 + 1e-12),
                _ => false,
            }
        })
    }));
    out.push(fuzz(1, "maclaurin vs tuples", 1000, &mut rng, |r| {
        let n = r.gen_range(1..=8usize);
        let k = r.gen_range(1..=n);
        let values: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..3.0)).collect();
        let mean = values.iter().sum::<f64>() / n as f64;
        let brute = tuple_mean(&values, k);
        maclaurin_check(&values, k).unwrap_or(false) && brute <= mean.powi(k as i32) + 1e-12
    }));
    for n in 2..=6usize {
        let constants: Vec<f64> = (2..=n).map(|k| 1.0 + 0.3 * k as f64).collect();
        let values = vec![0.41; n];
        let a = unroll_recurrence(&values, &constants)?;
        let b = subset_recursion(&values, &constants);
        out.push(Check::new(
            1,
            format!("unroll = subset induction, n={n}"),
            (a - b).abs() <= 1e-12 * b.max(1.0),
            Some(a - b),
            "difference within 1e-12",
        ));
    }
    for m in proof_maxima() {
        out.push(within(1, &format!("max {}", m.expression), m.numeric, m.closed_form, 1e-10));
    }
    let r3 = r3_readings();
    out.push(Check::new(
        1,
        "R3 constant, reflected reading",
        r3.reflected_matches(1e-10),
        Some(r3.reflected.value),
        format!("{} (literal reading gives {})", r3.target, r3.literal.value),
    ));
    Ok(out)
}

/// Mean of `Π values[i_j]` over ordered tuples of distinct indices.
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

/// `μ(A)` with equality in the recursive hypothesis, over all subsets.
fn subset_recursion(values: &[f64], constants: &[f64]) -> f64 {
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

fn tier2(cfg: &RunConfig) -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    for r in table1()? {
        out.push(Check::new(
            2,
            format!("table1 {} n={}", r.estimate.set.name(), r.n),
            r.matches_reference(2e-4) && r.estimate.certified,
            Some(r.estimate.value),
            format!("<= {} within 2e-4, certified", r.reference),
        ));
    }

    let spec = cfg.quadrature()?;
    let u = make_uniform();
    let direct = chi2_direct(&u, &spec)?;
    out.push(within(2, "uniform chi2 direct", direct.value, 0.3285, 5e-4));
    let series = chi2_series(&profile_for(&u, cfg, &spec)?);
    out.push(Check::new(
        2,
        "uniform chi2 series",
        direct.agrees_with(&series, AGREEMENT_SLACK),
        Some(series.value),
        format!("within 1e-6 + tail ({:e}) of direct", series.error_estimate),
    ));

    let basic = c_of_p(IndexSet::Basic, 1e-4, ConstantMethod::ExactMax)?;
    out.push(Check::new(
        2,
        "C_basic(1e-4)",
        basic.value <= 1.2183 && basic.value >= 1.2182 - 1e-3,
        Some(basic.value),
        "in [1.2172, 1.2183]",
    ));
    let sym = c_of_p(IndexSet::Symmetric, 1e-4, ConstantMethod::ExactMax)?;
    out.push(Check::new(2, "C_sym(1e-4)", sym.value <= 0.5893, Some(sym.value), "<= 0.5893"));

    let l = constant_sequence(40, true)?;
    out.push(Check::new(2, "L_2 < 3.2", l[0] < 3.2, Some(l[0]), "< 3.2"));
    let l_rest = l[1..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    out.push(Check::new(2, "L_k < 2.18, k=3..40", l_rest < 2.18, Some(l_rest), "< 2.18"));
    let d = constant_sequence(40, false)?;
    out.push(Check::new(
        2,
        "D_k, L_k >= 0, k=2..40",
        d.iter().chain(&l).all(|v| *v >= 0.0),
        None,
        "nonnegative",
    ));
    Ok(out)
}

pub struct SteinRow {
    pub m: usize,
    pub recurrence: f64,
    pub oracle: f64,
}

pub struct SteinReport {
    pub rows: Vec<SteinRow>,
    pub recurrence_sum: f64,
    pub oracle_sum: f64,
    pub oracle_chi2: f64,
}

/// `b_m` for `S_n` from the recurrence against the oracle sum density,
/// `m = 3..=max_order`, equal variances.
pub fn stein_comparison(dist: &str, n: usize, max_order: usize, cfg: &RunConfig) -> Result<SteinReport, CliError> {
    if n < 2 {
        return Err(CliError::Usage("--n must be at least 2".into()));
    }
    if max_order < 3 {
        return Err(CliError::Usage("--max-order must be at least 3".into()));
    }
    let spec = cfg.quadrature()?;
    let base = StandardizedDensity::from_name(dist)?;
    let leave_out = base.normalized_sum(n - 1)?;
    let oracle = base.normalized_sum(n)?;
    let a = hermite_profile(&base, max_order, &spec)?;
    let b = hermite_profile(&leave_out, max_order, &spec)?;
    let o = hermite_profile(&oracle, max_order, &spec)?;
    let variances = VarianceProfile::equal(n)?;
    let profiles = vec![a; n];
    let leaveouts = vec![b; n];
    let mut rows = Vec::new();
    for m in 3..=max_order {
        rows.push(SteinRow {
            m,
            recurrence: stein_recurrence_rhs(&profiles, &variances, &leaveouts, m)?,
            oracle: o.values[m],
        });
    }
    Ok(SteinReport {
        recurrence_sum: rows.iter().map(|r| r.recurrence * r.recurrence).sum(),
        oracle_sum: rows.iter().map(|r| r.oracle * r.oracle).sum(),
        oracle_chi2: chi2_direct(&oracle, &spec)?.value,
        rows,
    })
}

fn tier3(cfg: &RunConfig) -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    let spec = cfg.quadrature()?;
    let u = make_uniform();
    let v = chi2_direct(&u, &spec)?.value;
    for n in 2..=6usize {
        let oracle = chi2_direct(&u.normalized_sum(n)?, &spec)?;
        let report = theorem_bound(n, &vec![v; n], true)?.with_oracle(oracle.value);
        let limit = 1.6 / (n * n - 1) as f64;
        out.push(Check::new(
            3,
            format!("uniform sum soundness n={n}"),
            report.is_sound(oracle.error_estimate) == Some(true) && oracle.value < limit,
            Some(oracle.value),
            format!("<= bound {} and < 1.6/(n²-1) = {limit}", report.total),
        ));
    }
    for n in [2usize, 3] {
        let s = stein_comparison("uniform", n, 24, cfg)?;
        let worst = s.rows.iter().map(|r| (r.recurrence - r.oracle).abs()).fold(0.0, f64::max);
        out.push(Check::new(
            3,
            format!("stein recurrence n={n}, m=3..24"),
            worst <= STEIN_TOLERANCE,
            Some(worst),
            format!("max |difference| <= {STEIN_TOLERANCE:e}"),
        ));
        let gap = (s.recurrence_sum - s.oracle_sum).abs();
        out.push(Check::new(
            3,
            format!("stein parseval n={n}"),
            gap <= PARSEVAL_TOLERANCE,
            Some(gap),
            format!("|Σ b_m² - oracle| <= {PARSEVAL_TOLERANCE:e}"),
        ));
    }
    for name in ["uniform", "beta:2", "beta:2.5", "mixture:0.5"] {
        let d = StandardizedDensity::from_name(name)?;
        let margins = mgf_check(&d, &symmetric_t_grid(5.0, 25), &spec)?;
        let min = margins.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min);
        out.push(Check::new(3, format!("mgf margins {name}"), min > 0.0, Some(min), "> 0 on t = ±0.2..±5"));
    }
    Ok(out)
}

pub fn run_tiers(cfg: &RunConfig) -> Result<Vec<Check>, CliError> {
    let mut checks = tier1(cfg)?;
    if cfg.tier >= 2 {
        checks.extend(tier2(cfg)?);
    }
    if cfg.tier >= 3 {
        checks.extend(tier3(cfg)?);
    }
    Ok(checks)
}

pub fn checks_report(checks: &[Check]) -> Report {
    let mut t = Table::new("checks", &["tier", "check", "passed", "value", "target"]);
    for c in checks {
        t.push(vec![
            u32::from(c.tier).into(),
            c.name.as_str().into(),
            c.passed.into(),
            c.value.into(),
            c.target.as_str().into(),
        ]);
    }
    let mut s = Table::new("summary", &["tier", "passed", "failed"]);
    let tiers: std::collections::BTreeSet<u8> = checks.iter().map(|c| c.tier).collect();
    for tier in tiers {
        let (p, f) = checks
            .iter()
            .filter(|c| c.tier == tier)
            .fold((0usize, 0usize), |(p, f), c| if c.passed { (p + 1, f) } else { (p, f + 1) });
        s.push(vec![u32::from(tier).into(), p.into(), f.into()]);
    }
    let mut report = Report::new("verify");
    report.tables.push(t);
    report.tables.push(s);
    report
}

pub fn stein_report(s: &SteinReport) -> Report {
    let mut t = Table::new("stein", &["m", "recurrence", "oracle", "difference", "within_tolerance"]);
    for r in &s.rows {
        let d = (r.recurrence - r.oracle).abs();
        t.push(vec![r.m.into(), r.recurrence.into(), r.oracle.into(), d.into(), (d <= STEIN_TOLERANCE).into()]);
    }
    let mut p = Table::new(
        "parseval",
        &["recurrence_sum", "oracle_sum", "difference", "within_tolerance", "oracle_chi2_direct"],
    );
    let gap = (s.recurrence_sum - s.oracle_sum).abs();
    p.push(vec![
        s.recurrence_sum.into(),
        s.oracle_sum.into(),
        gap.into(),
        (gap <= PARSEVAL_TOLERANCE).into(),
        Value::Num(s.oracle_chi2),
    ]);
    let mut report = Report::new("verify stein");
    report.tables.push(t);
    report.tables.push(p);
    report
}

/// Failures in a stein comparison: rows over tolerance plus the Parseval sum.
pub fn stein_failures(s: &SteinReport) -> (usize, usize) {
    let rows = s
        .rows
        .iter()
        .filter(|r| (r.recurrence - r.oracle).abs() > STEIN_TOLERANCE)
        .count();
    let parseval = usize::from((s.recurrence_sum - s.oracle_sum).abs() > PARSEVAL_TOLERANCE);
    (rows + parseval, s.rows.len() + 1)
}
