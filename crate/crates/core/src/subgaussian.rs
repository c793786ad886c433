//! χ² thresholds that imply the subgaussian condition `E e^{tY} < e^{t²}`,
//! and direct checks of that condition.
//!
//! The threshold for a set `J` of vanishing Hermite moments is
//! `inf_{x>0} (e^{x/2}−1)² / (e^x − 1 − Σ_{n∈J} xⁿ/n!)`.

use std::fmt;
use std::str::FromStr;

use crate::densities::StandardizedDensity;
use crate::distances::HermiteProfile;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breakpoints, QuadratureSpec};
use crate::search::{log_grid, scan_then_golden};
use crate::special::{ln_factorial, CompensatedSum};

/// Left anchor of the search interval.
const X_MIN: f64 = 1e-12;
const X_MAX: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThresholdSet {
    /// `J = {1}`
    FirstMoment,
    /// `J = {1, 2}`
    Basic,
    /// `J = {2} ∪ odd`
    Symmetric,
}

impl ThresholdSet {
    pub fn name(self) -> &'static str {
        match self {
            ThresholdSet::FirstMoment => "first",
            ThresholdSet::Basic => "basic",
            ThresholdSet::Symmetric => "sym",
        }
    }

    /// `lim_{x→0⁺}` of the objective.
    pub fn limit_at_zero(self) -> f64 {
        match self {
            ThresholdSet::FirstMoment => 0.5,
            _ => f64::INFINITY,
        }
    }

    /// `lim_{x→∞}` of the objective.
    pub fn limit_at_infinity(self) -> f64 {
        match self {
            ThresholdSet::Symmetric => 2.0,
            _ => 1.0,
        }
    }
}

impl fmt::Display for ThresholdSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ThresholdSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" | "first-moment" => Ok(ThresholdSet::FirstMoment),
            "basic" => Ok(ThresholdSet::Basic),
            "sym" | "symmetric" => Ok(ThresholdSet::Symmetric),
            _ => Err(Error::Parse(format!("unknown threshold set '{s}' (first|basic|sym)"))),
        }
    }
}

/// `Σ_{n ≥ start, step} xⁿ/n!` for `0 < x ≤ 1`.
fn exp_remainder(x: f64, start: u32, step: u32) -> f64 {
    let mut term = (start as f64 * x.ln() - ln_factorial(start as u64)).exp();
    let mut n = start;
    let mut sum = CompensatedSum::new();
    while term > 1e-18 * sum.value() || sum.value() == 0.0 {
        sum.add(term);
        for _ in 0..step {
            n += 1;
            term *= x / n as f64;
        }
        if term == 0.0 {
            break;
        }
    }
    sum.value()
}

fn denominator(set: ThresholdSet, x: f64) -> f64 {
    if x <= 1.0 {
        return match set {
            ThresholdSet::FirstMoment => exp_remainder(x, 2, 1),
            ThresholdSet::Basic => exp_remainder(x, 3, 1),
            ThresholdSet::Symmetric => exp_remainder(x, 4, 2),
        };
    }
    match set {
        ThresholdSet::FirstMoment => x.exp_m1() - x,
        ThresholdSet::Basic => x.exp_m1() - x - 0.5 * x * x,
        ThresholdSet::Symmetric => x.cosh() - 1.0 - 0.5 * x * x,
    }
}

/// `(e^{x/2}−1)² / (e^x − 1 − Σ_{n∈J} xⁿ/n!)` for `x > 0`.
pub fn objective(set: ThresholdSet, x: f64) -> f64 {
    let num = (0.5 * x).exp_m1();
    num * num / denominator(set, x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    pub set: ThresholdSet,
    pub threshold: f64,
    pub argmin_x: f64,
    /// The infimum is a limit at an end of `(0, ∞)`, not an interior minimum.
    pub at_boundary: bool,
}

/// Infimum of the objective over `x > 0`: log-spaced scan, golden-section
/// refinement, then comparison with the analytic end limits.
pub fn threshold(set: ThresholdSet) -> ThresholdResult {
    let grid = log_grid(1e-6, X_MAX, 600);
    let f = |x: f64| objective(set, x);
    let (x, v) = scan_then_golden(f, &grid, 1e-12);
    let left = set.limit_at_zero();
    if left <= v {
        return ThresholdResult {
            set,
            threshold: left,
            argmin_x: X_MIN,
            at_boundary: true,
        };
    }
    ThresholdResult {
        set,
        threshold: v,
        argmin_x: x,
        at_boundary: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgfMargin {
    pub t: f64,
    pub mgf: f64,
    /// `e^{t²} − E e^{tY}`.
    pub margin: f64,
}

fn mgf_minus_one(density: &StandardizedDensity, t: f64, spec: &QuadratureSpec) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    if density.is_normal() {
        return Ok((0.5 * t * t).exp_m1());
    }
    // E(e^{tY} − 1 − tY) = E e^{tY} − 1 for a centred Y; e^{tx} p(x) is
    // formed in log space so unbounded tails do not overflow
    let (lo, hi) = density.support();
    let breaks = density.breakpoints();
    let f = |x: f64| {
        let tx = t * x;
        if tx.abs() < 1.0 {
            (tx.exp_m1() - tx) * density.pdf(x)
        } else {
            let lp = density.ln_pdf(x);
            if lp == f64::NEG_INFINITY {
                0.0
            } else {
                (tx + lp).exp() - (1.0 + tx) * lp.exp()
            }
        }
    };
    integrate_with_breakpoints(f, lo, hi, &breaks, spec).map(|i| i.value)
}

/// `e^{t²} − E e^{tY}` on a grid of nonzero `t`. This samples the condition;
/// it is not a proof over all `t`.
pub fn mgf_check(density: &StandardizedDensity, t_grid: &[f64], spec: &QuadratureSpec) -> Result<Vec<MgfMargin>> {
    t_grid
        .iter()
        .map(|&t| {
            if t == 0.0 || !t.is_finite() {
                return Err(Error::precondition("t must be finite and nonzero"));
            }
            let m1 = mgf_minus_one(density, t, spec)?;
            Ok(MgfMargin {
                t,
                mgf: 1.0 + m1,
                margin: (t * t).exp_m1() - m1,
            })
        })
        .collect()
}

/// `t_max·i/steps` for `i = ±1..±steps`.
pub fn symmetric_t_grid(t_max: f64, steps: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = (1..=steps)
        .map(|i| t_max * i as f64 / steps as f64)
        .flat_map(|t| [-t, t])
        .collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgfIdentity {
    /// `e^{t²/2} Σ_{n≤N} a_n tⁿ/√(n!)`
    pub series: f64,
    /// `E e^{tY}` by quadrature.
    pub direct: f64,
    /// Cauchy–Schwarz bound on the truncated part of the series.
    pub tail_allowance: f64,
}

impl MgfIdentity {
    pub fn agrees(&self, slack: f64) -> bool {
        (self.series - self.direct).abs() <= self.tail_allowance + slack
    }
}

/// Both sides of `E e^{tY} = e^{t²/2} Σ E H_n(Y) tⁿ/n!`.
pub fn hermite_mgf_identity_check(
    density: &StandardizedDensity,
    profile: &HermiteProfile,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<MgfIdentity> {
    if !t.is_finite() {
        return Err(Error::precondition("t must be finite"));
    }
    let weight = (0.5 * t * t).exp();
    let mut sum = CompensatedSum::new();
    let mut coeff = 1.0; // tⁿ/√(n!)
    for (n, a) in profile.values.iter().enumerate() {
        if n > 0 {
            coeff *= t / (n as f64).sqrt();
        }
        sum.add(a * coeff);
    }
    // Σ_{n>N} t^{2n}/n!
    let mut rest = CompensatedSum::new();
    let mut term = coeff * coeff;
    let mut n = profile.order;
    loop {
        n += 1;
        term *= t * t / n as f64;
        rest.add(term);
        if term <= 1e-18 * rest.value() || term == 0.0 {
            break;
        }
    }
    let chi2_bound = profile.values.iter().skip(1).map(|a| a * a).sum::<f64>() + profile.tail_bound;
    Ok(MgfIdentity {
        series: weight * sum.value(),
        direct: 1.0 + mgf_minus_one(density, t, spec)?,
        tail_allowance: weight * (chi2_bound * rest.value()).sqrt(),
    })
}
