//! The correction constants `C_J(p) = max_{s≥1} h_J(s, p)`.
//!
//! ```text
//! h_J(s,p)  = (1−p)^s/p² Σ_{k∉J} k²/(k+s)² C(k+s,k) p^k
//! h⁰_{1,2}  = 1/(1−p) − 2(1−p)^s + (1−(1−p)^s)/(ps)            (h ≤ h⁰)
//! h⁰_sym    = ½(h⁰_{1,2}(s,p) + ((1−p)/(1+p))^s h⁰_{1,2}(s,−p))
//! g(x)      = 1 − 2e^{−x} + (1−e^{−x})/x,   g_sym(x) = ½(g(x) + e^{−2x}g(−x))
//! ```
//!
//! `h_J` has an exact closed form with a finite alternating sum and a
//! logarithm; it cancels badly in floating point once `s` grows, so the
//! evaluator falls back to the positive-term series.

use std::collections::HashMap;
use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use once_cell::sync::Lazy;

use crate::error::{Error, Result};
use crate::search::{bisect, log_grid, scan_then_golden};
use crate::special::{atanh_minus_x, ln1p_minus_x, CompensatedSum};

/// Largest `s` accepted by [`h_exact`].
pub const MAX_EXACT_S: u64 = 10_000;

/// Largest search cutoff [`c_of_p`] will scan before giving up.
pub const MAX_SEARCH_S: u64 = 1 << 30;

/// Closed-form guard: intermediate terms above this multiple of the result
/// trigger the series fallback. Each factor of ten costs about one digit.
const CANCELLATION_RATIO: f64 = 1e5;

/// Bounds printed for `n = 2..10` (`p = 1/n`).
pub const REFERENCE_BASIC: [f64; 9] = [2.1327, 1.6582, 1.5043, 1.4293, 1.3851, 1.3560, 1.3354, 1.3202, 1.3085];
pub const REFERENCE_SYMMETRIC: [f64; 9] = [1.0570, 0.8168, 0.7387, 0.7001, 0.6773, 0.6622, 0.6515, 0.6436, 0.6374];

/// Upper bounds for `lim_{p→0} C_J(p)`.
pub const LIMIT_BOUND_BASIC: f64 = 1.2183;
pub const LIMIT_BOUND_SYMMETRIC: f64 = 0.5893;

/// Which Hermite orders are known to have vanishing moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndexSet {
    /// `{1, 2}`: mean 0, variance 1.
    Basic,
    /// `{2} ∪ odd`: additionally symmetric.
    Symmetric,
}

impl IndexSet {
    pub fn contains(self, k: u64) -> bool {
        match self {
            IndexSet::Basic => k == 1 || k == 2,
            IndexSet::Symmetric => k == 2 || k % 2 == 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IndexSet::Basic => "basic",
            IndexSet::Symmetric => "sym",
        }
    }

    pub fn limit_bound(self) -> f64 {
        match self {
            IndexSet::Basic => LIMIT_BOUND_BASIC,
            IndexSet::Symmetric => LIMIT_BOUND_SYMMETRIC,
        }
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IndexSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basic" | "12" | "{1,2}" => Ok(IndexSet::Basic),
            "sym" | "symmetric" => Ok(IndexSet::Symmetric),
            _ => Err(Error::Parse(format!("unknown index set '{s}' (basic|sym)"))),
        }
    }
}

fn check_domain(s: u64, p: f64) -> Result<()> {
    if s == 0 {
        return Err(Error::precondition("s must be a positive integer"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::precondition(format!("p must lie in (0, 1), got {p}")));
    }
    Ok(())
}

// ---------------------------------------------------------------- g

/// `g(x)`, with `g(0) = 0`.
pub fn g(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        return x * (1.5 + x * (-5.0 / 6.0 + x * 7.0 / 24.0));
    }
    let em = (-x).exp_m1();
    -1.0 - 2.0 * em - em / x
}

pub fn g_prime(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        return 1.5 + x * (-5.0 / 3.0 + x * 7.0 / 8.0);
    }
    let e = (-x).exp();
    2.0 * e + (e * (x + 1.0) - 1.0) / (x * x)
}

pub fn g_sym(x: f64) -> f64 {
    0.5 * (g(x) + mirrored_g(x))
}

/// `e^{−2x} g(−x)`, expanded for large `x` where `g(−x)` overflows.
fn mirrored_g(x: f64) -> f64 {
    if x < 1.0 {
        return (-2.0 * x).exp() * g(-x);
    }
    let e1 = (-x).exp();
    let e2 = e1 * e1;
    e2 - 2.0 * e1 + (e1 - e2) / x
}

pub fn g_sym_prime(x: f64) -> f64 {
    let e2 = (-2.0 * x).exp();
    0.5 * (g_prime(x) - 2.0 * e2 * g(-x) - e2 * g_prime(-x))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub x: f64,
    pub value: f64,
}

fn derivative_root_max(f: fn(f64) -> f64, df: fn(f64) -> f64) -> Extremum {
    let x = bisect(df, 0.5, 20.0, 1e-12).expect("derivative changes sign on [0.5, 20]");
    Extremum { x, value: f(x) }
}

static G_MAX: Lazy<Extremum> = Lazy::new(|| derivative_root_max(g, g_prime));
static G_SYM_MAX: Lazy<Extremum> = Lazy::new(|| derivative_root_max(g_sym, g_sym_prime));

/// Maximum of `g` on `(0, ∞)`, located by bisection on `g'`.
pub fn g_max() -> Extremum {
    *G_MAX
}

pub fn g_sym_max() -> Extremum {
    *G_SYM_MAX
}

// ---------------------------------------------------------------- h⁰

/// `(1−p)^s` for `p ∈ (−1, 1)`.
fn pow1m(p: f64, s: f64) -> f64 {
    (s * (-p).ln_1p()).exp()
}

fn h0_basic(s: f64, p: f64) -> f64 {
    let q = pow1m(p, s);
    1.0 / (1.0 - p) - 2.0 * q + (1.0 - q) / (p * s)
}

fn h0_sym(s: f64, p: f64) -> f64 {
    let r = ((1.0 - p) / (1.0 + p)).powf(s);
    let q = pow1m(p, s);
    // r^s h⁰(s,−p) expanded so nothing overflows
    let mirrored = r / (1.0 + p) - 2.0 * q - (r - q) / (p * s);
    0.5 * (h0_basic(s, p) + mirrored)
}

pub(crate) fn h0_unchecked(set: IndexSet, s: u64, p: f64) -> f64 {
    match set {
        IndexSet::Basic => h0_basic(s as f64, p),
        IndexSet::Symmetric => h0_sym(s as f64, p),
    }
}

/// Relaxed upper bound `h⁰_J(s, p) ≥ h_J(s, p)`.
pub fn h0(set: IndexSet, s: u64, p: f64) -> Result<f64> {
    check_domain(s, p)?;
    Ok(h0_unchecked(set, s, p))
}

/// Bound on `h⁰_J(s', p)` for every `s' ≥ s`; nonincreasing in `s`.
pub fn tail_certificate(set: IndexSet, s: u64, p: f64) -> f64 {
    let sf = s as f64;
    let base = 1.0 / (1.0 - p) + 1.0 / (p * sf);
    match set {
        IndexSet::Basic => base,
        IndexSet::Symmetric => {
            let r = ((1.0 - p) / (1.0 + p)).powf(sf);
            0.5 * (base + r / (1.0 + p) + pow1m(p, sf) / (p * sf))
        }
    }
}

// ---------------------------------------------------------------- h

/// `h_J(s, p)` by direct summation of its defining series.
///
/// Terms are generated in log space through the ratio
/// `T_{k+1}/T_k = (k+1)(k+s)² p / (k²(k+s+1))`, which decreases in `k`;
/// summation stops once the geometric tail is below `1e-18` of the sum.
pub fn h_series(set: IndexSet, s: u64, p: f64) -> f64 {
    let sf = s as f64;
    let k0: u64 = match set {
        IndexSet::Basic => 3,
        IndexSet::Symmetric => 4,
    };
    let ln_p = p.ln();
    let ln_binom: f64 = (1..=k0).map(|i| ((sf + i as f64) / i as f64).ln()).sum();
    let k0f = k0 as f64;
    let mut ln_t = sf * (-p).ln_1p() - 2.0 * ln_p + 2.0 * (k0f / (k0f + sf)).ln() + ln_binom + k0f * ln_p;

    let ratio = |k: f64| (k + 1.0) * (k + sf) * (k + sf) * p / (k * k * (k + sf + 1.0));
    let mut logs: Vec<f64> = Vec::new();
    let mut ln_max = f64::NEG_INFINITY;
    let mut k = k0;
    loop {
        if !set.contains(k) {
            logs.push(ln_t);
            ln_max = ln_max.max(ln_t);
        }
        let r = ratio(k as f64);
        let ln_next = ln_t + r.ln();
        let r_next = ratio(k as f64 + 1.0);
        if r < 1.0 && r_next < 1.0 && ln_next - (1.0 - r_next).ln() < ln_max - 41.5 {
            break;
        }
        ln_t = ln_next;
        k += 1;
    }
    let sum: CompensatedSum = logs.iter().map(|l| (l - ln_max).exp()).collect();
    ln_max.exp() * sum.value()
}

/// Closed form for `J = {1,2}`, valid for `p ∈ (−1, 1) \ {0}`; `None` when
/// the cancellation guard trips.
fn closed_basic(s: u64, p: f64) -> Option<f64> {
    let sf = s as f64;
    let q = p / (1.0 - p);
    let scale = sf / p.powf(sf);
    let sign_s = if s % 2 == 0 { -1.0 } else { 1.0 }; // (−1)^{s+1}
    let mut terms: Vec<f64> = Vec::with_capacity(s as usize + 4);
    terms.push(p / (1.0 - p).powf(sf + 1.0));
    let mut qpow = 1.0;
    for j in 0..s {
        qpow *= q;
        // (−1)^{j+s+1} q^{j+1}/(j+1)
        let sign = if j % 2 == 0 { sign_s } else { -sign_s };
        terms.push(-scale * sign * qpow / (j + 1) as f64);
    }
    terms.push(-scale * sign_s * (-p).ln_1p());
    terms.push(-p / (1.0 + sf));
    terms.push(-2.0 * (sf + 1.0) * p * p / (sf + 2.0));
    let bracket: CompensatedSum = terms.iter().copied().collect();
    let bracket = bracket.value();
    let largest = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if !largest.is_finite() || largest > CANCELLATION_RATIO * bracket.abs() {
        return None;
    }
    Some(pow1m(p, sf) / (p * p) * bracket)
}

/// `h_J(s, p)` through the closed form, or `None` when it cancels.
pub fn h_closed_form(set: IndexSet, s: u64, p: f64) -> Option<f64> {
    match set {
        IndexSet::Basic => closed_basic(s, p),
        IndexSet::Symmetric => {
            let a = closed_basic(s, p)?;
            let b = ((1.0 - p) / (1.0 + p)).powf(s as f64) * closed_basic(s, -p)?;
            let v = 0.5 * (a + b);
            if a.abs().max(b.abs()) > CANCELLATION_RATIO * v.abs() {
                return None;
            }
            Some(v)
        }
    }
}

/// Rough number of series terms: the terms peak near `k = s√p/(1−√p)` and
/// then decay at least like `p^k`.
fn series_length(s: u64, p: f64) -> f64 {
    let r = p.sqrt();
    2.0 * s as f64 * r / (1.0 - r) + 50.0 / -p.ln()
}

pub(crate) fn h_exact_unchecked(set: IndexSet, s: u64, p: f64) -> f64 {
    // the closed form has s + 3 terms
    if series_length(s, p) < s as f64 {
        return h_series(set, s, p);
    }
    h_closed_form(set, s, p).unwrap_or_else(|| h_series(set, s, p))
}

/// Exact `h_J(s, p)` for `s ≤ 10⁴`.
pub fn h_exact(set: IndexSet, s: u64, p: f64) -> Result<f64> {
    check_domain(s, p)?;
    if s > MAX_EXACT_S {
        return Err(Error::capacity(format!("s = {s} exceeds {MAX_EXACT_S}")));
    }
    Ok(h_exact_unchecked(set, s, p))
}

// ---------------------------------------------------------------- C_J(p)

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Certified maximization of `h_J(s, p)` over `s`.
    ExactMax,
    /// Explicit upper bound linear in `p/(1−p)`.
    ClosedFormUpper,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ExactMax => "exact",
            Method::ClosedFormUpper => "upper",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "exact-max" => Ok(Method::ExactMax),
            "upper" | "closed-form-upper" => Ok(Method::ClosedFormUpper),
            _ => Err(Error::Parse(format!("unknown method '{s}' (exact|upper)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantEstimate {
    pub p: f64,
    pub set: IndexSet,
    pub value: f64,
    pub argmax_s: Option<u64>,
    pub method: Method,
    /// Whether every `s` beyond the scanned range is provably dominated.
    pub certified: bool,
    /// Last `s` examined by the scan.
    pub search_cutoff: Option<u64>,
}

/// `1.2183 + 1.6066 p/(1−p)`, or
/// `0.5893 + 0.9724 p/(1−p) + 0.1405 p²/(1−p²)²`.
pub fn closed_form_upper(set: IndexSet, p: f64) -> f64 {
    let odds = p / (1.0 - p);
    match set {
        IndexSet::Basic => 1.2183 + 1.6066 * odds,
        IndexSet::Symmetric => {
            let d = 1.0 - p * p;
            0.5893 + 0.9724 * odds + 0.1405 * p * p / (d * d)
        }
    }
}

/// Certified-to-cutoff bound valid for all `p ∈ (0,1)`: `max g` (or
/// `max g_sym`) plus the sandwich remainder.
pub fn analytic_upper(set: IndexSet, p: f64) -> f64 {
    let odds = p / (1.0 - p);
    match set {
        IndexSet::Basic => g_max().value + (1.0 + (-0.5f64).exp()) * odds,
        IndexSet::Symmetric => {
            let d = 1.0 - p * p;
            g_sym_max().value
                + 0.5 * (1.0 + 2.0 * (-0.75f64).exp()) * odds
                + (4.0 * E.powf(1.5) - 1.0) / (6.0 * E.powi(3)) * p * p / (d * d)
        }
    }
}

static CACHE: Lazy<Mutex<HashMap<(IndexSet, u64), ConstantEstimate>>> = Lazy::new(|| Mutex::new(HashMap::new()));

fn exact_max(set: IndexSet, p: f64) -> Result<ConstantEstimate> {
    let mut cutoff = (20.0 / p).ceil() as u64;
    let mut best = f64::NEG_INFINITY;
    let mut argmax = 1;
    let mut s = 1u64;
    let mut certified = false;
    for _ in 0..=4 {
        if cutoff > MAX_SEARCH_S {
            return Err(Error::capacity(format!("search cutoff {cutoff} too large for p = {p}")));
        }
        while s <= cutoff {
            // once the monotone tail bound is below the running max, no
            // larger s can win
            if best.is_finite() && tail_certificate(set, s, p) <= best {
                certified = true;
                break;
            }
            if h0_unchecked(set, s, p) > best {
                let v = h_exact_unchecked(set, s, p);
                if v > best {
                    best = v;
                    argmax = s;
                }
            }
            s += 1;
        }
        if certified || tail_certificate(set, cutoff + 1, p) <= best {
            certified = true;
            break;
        }
        cutoff *= 2;
    }
    Ok(ConstantEstimate {
        p,
        set,
        value: best,
        argmax_s: Some(argmax),
        method: Method::ExactMax,
        certified,
        search_cutoff: Some(s.min(cutoff)),
    })
}

/// `C_J(p)` by certified maximization or by the closed-form upper bound.
pub fn c_of_p(set: IndexSet, p: f64, method: Method) -> Result<ConstantEstimate> {
    check_domain(1, p)?;
    match method {
        Method::ClosedFormUpper => Ok(ConstantEstimate {
            p,
            set,
            value: closed_form_upper(set, p),
            argmax_s: None,
            method,
            certified: true,
            search_cutoff: None,
        }),
        Method::ExactMax => {
            let key = (set, p.to_bits());
            if let Some(hit) = CACHE.lock().expect("cache lock").get(&key) {
                return Ok(hit.clone());
            }
            let est = exact_max(set, p)?;
            CACHE.lock().expect("cache lock").insert(key, est.clone());
            Ok(est)
        }
    }
}

// ---------------------------------------------------------------- table

/// `x` rounded up to `decimals` places.
pub fn round_up(x: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    let y = x * f;
    // guard against representation error just above an integer
    let r = y.round();
    if (y - r).abs() < 1e-9 {
        r / f
    } else {
        y.ceil() / f
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Row {
    pub n: u32,
    pub estimate: ConstantEstimate,
    pub rounded_up: f64,
    pub reference: f64,
}

impl Table1Row {
    /// Computed value is below the reference bound and within `tol` of it.
    pub fn matches_reference(&self, tol: f64) -> bool {
        self.estimate.value <= self.reference && self.reference - self.estimate.value <= tol
    }
}

/// `C_J(1/n)` for `n = 2..10` and both sets (basic rows first).
pub fn table1() -> Result<Vec<Table1Row>> {
    let mut rows = Vec::with_capacity(18);
    for (set, refs) in [
        (IndexSet::Basic, REFERENCE_BASIC),
        (IndexSet::Symmetric, REFERENCE_SYMMETRIC),
    ] {
        for n in 2..=10u32 {
            let estimate = c_of_p(set, 1.0 / n as f64, Method::ExactMax)?;
            rows.push(Table1Row {
                n,
                rounded_up: round_up(estimate.value, 4),
                reference: refs[n as usize - 2],
                estimate,
            });
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------- lemmas

/// The three two-sided elementary inequalities, each divided by its
/// exponential factor:
///
/// 1. `0 < e^{sp} − (1+p)^s < (sp²/2) e^{sp}`
/// 2. `0 < e^{−sp} − (1−p)^s < (sp²/(2(1−p))) e^{−sp}`
/// 3. `0 < e^{−2sp} − ((1−p)/(1+p))^s < (2sp³/(3(1−p²)²)) e^{−2sp}`
pub fn elementary_inequalities_check(s: u64, p: f64) -> Result<[bool; 3]> {
    check_domain(s, p)?;
    let sf = s as f64;
    let first = -(sf * ln1p_minus_x(p)).exp_m1();
    let second = -(sf * ln1p_minus_x(-p)).exp_m1();
    let third = -(-2.0 * sf * atanh_minus_x(p)).exp_m1();
    let d = 1.0 - p * p;
    Ok([
        first > 0.0 && first < sf * p * p / 2.0,
        second > 0.0 && second < sf * p * p / (2.0 * (1.0 - p)),
        third > 0.0 && third < 2.0 * sf * p.powi(3) / (3.0 * d * d),
    ])
}

/// `g(sp) ≤ h⁰_{1,2}(s,p) ≤ g(sp) + (1+1/√e)p/(1−p)`.
pub fn sandwich_check(s: u64, p: f64) -> Result<bool> {
    check_domain(s, p)?;
    let x = s as f64 * p;
    let h = h0_unchecked(IndexSet::Basic, s, p);
    let slack = 1e-13 * h.abs().max(1.0);
    Ok(g(x) <= h + slack && h <= g(x) + (1.0 + (-0.5f64).exp()) * p / (1.0 - p) + slack)
}

/// `h⁰_sym(s,p) ≤ g_sym(sp) + ½(1+2e^{−3/4})p/(1−p) + ((4e^{3/2}−1)/(6e³))p²/(1−p²)²`.
pub fn sym_sandwich_check(s: u64, p: f64) -> Result<bool> {
    check_domain(s, p)?;
    let x = s as f64 * p;
    let h = h0_unchecked(IndexSet::Symmetric, s, p);
    let d = 1.0 - p * p;
    let rhs = g_sym(x)
        + 0.5 * (1.0 + 2.0 * (-0.75f64).exp()) * p / (1.0 - p)
        + (4.0 * E.powf(1.5) - 1.0) / (6.0 * E.powi(3)) * p * p / (d * d);
    Ok(h <= rhs + 1e-13 * rhs.abs().max(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProofMaximum {
    pub expression: &'static str,
    pub argmax: f64,
    pub numeric: f64,
    pub closed_form: f64,
}

fn numeric_max(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let grid = log_grid(1e-6, 50.0, 800);
    let (x, v) = scan_then_golden(|x| -f(x), &grid, 1e-13);
    (x, -v)
}

/// The one-dimensional maxima used in the sandwich bounds, located
/// numerically and paired with their closed forms.
pub fn proof_maxima() -> Vec<ProofMaximum> {
    let r3 = |x: f64| (-2.0 * x).exp() * (-g(-x)) * x;
    let cases: [(&'static str, Box<dyn Fn(f64) -> f64>, f64); 3] = [
        ("1+e^{-x}(x+1/2)", Box::new(|x: f64| 1.0 + (-x).exp() * (x + 0.5)), 1.0 + (-0.5f64).exp()),
        ("1+e^{-x}(2x+1/2)", Box::new(|x: f64| 1.0 + (-x).exp() * (2.0 * x + 0.5)), 1.0 + 2.0 * (-0.75f64).exp()),
        ("e^{-2x}(-g(-x))x", Box::new(r3), (4.0 * E.powf(1.5) - 1.0) / (2.0 * E.powi(3))),
    ];
    cases
        .into_iter()
        .map(|(expression, f, closed_form)| {
            let (argmax, numeric) = numeric_max(f);
            ProofMaximum {
                expression,
                argmax,
                numeric,
                closed_form,
            }
        })
        .collect()
}

/// Both readings of the constant `(4e^{3/2}−1)/(2e³)`.
#[derive(Debug, Clone, PartialEq)]
pub struct R3Readings {
    pub target: f64,
    /// `sup_{x>0} e^{−2x}(−g(x))x`, taken literally; `g > 0` there, so
    /// the supremum is 0 and only approached at the ends.
    pub literal: Extremum,
    /// `max_{x>0} e^{−2x}(−g(−x))x`.
    pub reflected: Extremum,
}

impl R3Readings {
    pub fn literal_matches(&self, tol: f64) -> bool {
        (self.literal.value - self.target).abs() <= tol
    }

    pub fn reflected_matches(&self, tol: f64) -> bool {
        (self.reflected.value - self.target).abs() <= tol
    }
}

pub fn r3_readings() -> R3Readings {
    let (lx, lv) = numeric_max(|x| (-2.0 * x).exp() * (-g(x)) * x);
    let (rx, rv) = numeric_max(|x| (-2.0 * x).exp() * (-g(-x)) * x);
    R3Readings {
        target: (4.0 * E.powf(1.5) - 1.0) / (2.0 * E.powi(3)),
        literal: Extremum { x: lx, value: lv },
        reflected: Extremum { x: rx, value: rv },
    }
}
