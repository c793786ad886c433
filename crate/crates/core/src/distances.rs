//! χ² divergence to the standard normal, by direct integration and by the
//! Hermite (Parseval) series, plus the distance bounds it implies.
//!
//! `χ²(Y, 𝒩) = ∫ p²/φ dx − 1 = Σ_{j≥1} a_j²` with `a_j = E H_j(Y)/√(j!)`.

use rayon::prelude::*;

use crate::densities::{Family, StandardizedDensity};
use crate::error::{Error, Result};
use crate::hermite::{raw_normalized, DEFAULT_MAX_ORDER};
use crate::quadrature::{integrate, integrate_with_breakpoints, QuadratureSpec, TailPolicy};
use crate::special::{compensated_sum, normal_cdf, normal_ln_pdf, FRAC_1_SQRT_2PI};

pub const DEFAULT_ORDER: usize = 40;

/// Target for the adaptive profile's tail bound.
pub const TAIL_TARGET: f64 = 1e-8;

/// Radii used to detect a divergent `∫ p²/φ` on unbounded support.
const DIVERGENCE_RADII: [f64; 4] = [8.0, 16.0, 32.0, 64.0];

/// Moments below this are treated as quadrature noise by the envelope fit.
const ENVELOPE_FLOOR: f64 = 1e-13;

/// Negative results above this are rounding noise and clamp silently.
const NEGATIVE_NOISE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chi2Method {
    DirectIntegral,
    ParsevalSeries,
}

impl Chi2Method {
    pub fn name(self) -> &'static str {
        match self {
            Chi2Method::DirectIntegral => "direct",
            Chi2Method::ParsevalSeries => "series",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chi2Result {
    /// `f64::INFINITY` when the integral diverges.
    pub value: f64,
    pub method: Chi2Method,
    pub truncation_order: Option<usize>,
    pub error_estimate: f64,
    /// Set when a negative value below rounding noise had to be clamped.
    pub warning: Option<String>,
}

impl Chi2Result {
    fn new(value: f64, method: Chi2Method, truncation_order: Option<usize>, error_estimate: f64) -> Self {
        let mut warning = None;
        let value = if value < 0.0 {
            if value < -NEGATIVE_NOISE {
                warning = Some(format!("negative χ² {value:e} clamped to 0"));
            }
            0.0
        } else {
            value
        };
        Chi2Result {
            value,
            method,
            truncation_order,
            error_estimate,
            warning,
        }
    }

    fn infinite(method: Chi2Method) -> Self {
        Chi2Result {
            value: f64::INFINITY,
            method,
            truncation_order: None,
            error_estimate: f64::INFINITY,
            warning: None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    /// Whether two results agree within `slack` plus both error estimates.
    pub fn agrees_with(&self, other: &Chi2Result, slack: f64) -> bool {
        if !self.is_finite() || !other.is_finite() {
            return self.value == other.value;
        }
        (self.value - other.value).abs() <= slack + self.error_estimate + other.error_estimate
    }
}

/// Normalized Hermite moments `a_0..a_N` with a bound on `Σ_{j>N} a_j²`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteProfile {
    pub values: Vec<f64>,
    pub order: usize,
    pub tail_bound: f64,
}

impl HermiteProfile {
    pub fn from_values(values: Vec<f64>, tail_bound: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::precondition("a profile needs at least a_0"));
        }
        if !(tail_bound >= 0.0) {
            return Err(Error::precondition("tail bound must be nonnegative"));
        }
        Ok(HermiteProfile {
            order: values.len() - 1,
            values,
            tail_bound,
        })
    }

    /// Profile of the standard normal: `a_0 = 1`, everything else 0.
    pub fn normal(order: usize) -> Self {
        let mut values = vec![0.0; order + 1];
        values[0] = 1.0;
        HermiteProfile {
            values,
            order,
            tail_bound: 0.0,
        }
    }

    /// `a_j`, or a capacity error past the truncation order.
    pub fn get(&self, j: usize) -> Result<f64> {
        self.values.get(j).copied().ok_or_else(|| {
            Error::capacity(format!("profile has order {}, need {j}", self.order))
        })
    }

    /// `Σ_{j=1}^N a_j²`.
    pub fn partial_sum(&self) -> f64 {
        compensated_sum(self.values.iter().skip(1).map(|a| a * a))
    }

    /// Running partial sums `Σ_{j=1}^k a_j²` for `k = 1..N`.
    pub fn partial_sums(&self) -> Vec<f64> {
        let mut acc = crate::special::CompensatedSum::new();
        self.values
            .iter()
            .skip(1)
            .map(|a| {
                acc.add(a * a);
                acc.value()
            })
            .collect()
    }
}

/// `E Ĥ_j(Y)` for `j` in `range`, one quadrature per order.
fn moments(density: &StandardizedDensity, range: std::ops::RangeInclusive<usize>, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    if density.is_normal() {
        return Ok(range.map(|j| if j == 0 { 1.0 } else { 0.0 }).collect());
    }
    range
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|j| {
            if j == 0 {
                return Ok(1.0);
            }
            density.expect(|x| raw_normalized(j, x), spec).map(|i| i.value)
        })
        .collect()
}

/// Geometric envelope `A ρ^j` fitted to the last quarter of the profile;
/// returns `Σ_{j>N} A² ρ^{2j}`, or `None` when no decay is visible.
fn envelope_tail(values: &[f64]) -> Option<f64> {
    let n = values.len() - 1;
    let start = (3 * n / 4).max(3);
    let pts: Vec<(f64, f64)> = (start..=n)
        .filter(|&j| values[j].abs() > ENVELOPE_FLOOR)
        .map(|j| (j as f64, values[j].abs().ln()))
        .collect();
    if pts.len() < 3 {
        return if pts.is_empty() { Some(0.0) } else { None };
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return None;
    }
    let rho = slope.exp();
    let amp = pts
        .iter()
        .map(|(j, l)| l - j * slope)
        .fold(f64::NEG_INFINITY, f64::max)
        .exp();
    Some(amp * amp * rho.powf(2.0 * (n as f64 + 1.0)) / (1.0 - rho * rho))
}

fn tail_bound(values: &[f64], direct: &Chi2Result) -> f64 {
    if !direct.is_finite() {
        return f64::INFINITY;
    }
    let partial = compensated_sum(values.iter().skip(1).map(|a| a * a));
    let gap = (direct.value - partial).max(0.0) + direct.error_estimate;
    match envelope_tail(values) {
        Some(env) => env.max(gap),
        None => gap,
    }
}

/// Profile `a_0..a_N` by quadrature of `p·Ĥ_j`.
pub fn hermite_profile(density: &StandardizedDensity, order: usize, spec: &QuadratureSpec) -> Result<HermiteProfile> {
    if order < 2 {
        return Err(Error::precondition("profile order must be at least 2"));
    }
    if order > DEFAULT_MAX_ORDER {
        return Err(Error::capacity(format!(
            "profile order {order} exceeds {DEFAULT_MAX_ORDER}"
        )));
    }
    if density.is_normal() {
        return Ok(HermiteProfile::normal(order));
    }
    let values = moments(density, 0..=order, spec)?;
    let direct = chi2_direct(density, spec)?;
    Ok(HermiteProfile {
        tail_bound: tail_bound(&values, &direct),
        values,
        order,
    })
}

/// Profile with `N = 40` doubled until the tail bound drops below
/// [`TAIL_TARGET`] or `N` reaches 256.
pub fn hermite_profile_adaptive(density: &StandardizedDensity, spec: &QuadratureSpec) -> Result<HermiteProfile> {
    if density.is_normal() {
        return Ok(HermiteProfile::normal(DEFAULT_ORDER));
    }
    let direct = chi2_direct(density, spec)?;
    let mut values = moments(density, 0..=DEFAULT_ORDER, spec)?;
    loop {
        let order = values.len() - 1;
        let tail = tail_bound(&values, &direct);
        if tail < TAIL_TARGET || order >= DEFAULT_MAX_ORDER {
            return Ok(HermiteProfile {
                values,
                order,
                tail_bound: tail,
            });
        }
        let next = (2 * order).min(DEFAULT_MAX_ORDER);
        values.extend(moments(density, order + 1..=next, spec)?);
    }
}

fn ln_sq_ratio(ln_p: f64, x: f64) -> f64 {
    if ln_p == f64::NEG_INFINITY {
        return 0.0;
    }
    (2.0 * ln_p - normal_ln_pdf(x)).exp()
}

/// `∫ p²/φ dx − 1`.
pub fn chi2_direct(density: &StandardizedDensity, spec: &QuadratureSpec) -> Result<Chi2Result> {
    let method = Chi2Method::DirectIntegral;
    let breaks = density.breakpoints();
    match density.family() {
        Family::Normal => Ok(Chi2Result::new(0.0, method, None, 0.0)),
        Family::Beta { shape, .. } if *shape <= 0.5 => Ok(Chi2Result::infinite(method)),
        Family::Piecewise(pp) => {
            let (lo, hi) = pp.support_x();
            let sqrt_2pi = 1.0 / FRAC_1_SQRT_2PI;
            let r = integrate_with_breakpoints(
                |x| {
                    let p = pp.pdf(x);
                    p * p * sqrt_2pi * (0.5 * x * x).exp()
                },
                lo,
                hi,
                &breaks,
                spec,
            )?;
            Ok(Chi2Result::new(r.value - 1.0, method, None, r.error_estimate))
        }
        Family::Beta { .. } => {
            let (lo, hi) = density.support();
            let r = integrate_with_breakpoints(|x| ln_sq_ratio(density.ln_pdf(x), x), lo, hi, &breaks, spec)?;
            Ok(Chi2Result::new(r.value - 1.0, method, None, r.error_estimate))
        }
        Family::Mixture { .. } => {
            let f = |x: f64| ln_sq_ratio(density.ln_pdf(x), x);
            let mut values = Vec::with_capacity(DIVERGENCE_RADII.len());
            for radius in DIVERGENCE_RADII {
                let s = spec.with_tail(TailPolicy::Truncate(radius))?;
                let v = match integrate_with_breakpoints(f, -radius, radius, &breaks, &s) {
                    Ok(r) => r.value,
                    Err(Error::Accuracy { best, .. }) => best,
                    Err(e) => return Err(e),
                };
                if !v.is_finite() {
                    return Ok(Chi2Result::infinite(method));
                }
                values.push(v);
            }
            let (prev, last) = (values[values.len() - 2], values[values.len() - 1]);
            if last - prev > 1e-6 * prev.abs().max(1.0) {
                return Ok(Chi2Result::infinite(method));
            }
            let r = integrate(f, f64::NEG_INFINITY, f64::INFINITY, &spec.with_tail(TailPolicy::Map)?);
            match r {
                Ok(r) if (r.value - last).abs() <= 1e-6 * last.abs().max(1.0) => {
                    Ok(Chi2Result::new(r.value - 1.0, method, None, r.error_estimate))
                }
                Ok(_) | Err(Error::Accuracy { .. }) => Ok(Chi2Result::infinite(method)),
                Err(e) => Err(e),
            }
        }
    }
}

/// `Σ_{j=1}^N a_j²`, with the profile's tail bound as error estimate.
pub fn chi2_series(profile: &HermiteProfile) -> Chi2Result {
    Chi2Result::new(
        profile.partial_sum(),
        Chi2Method::ParsevalSeries,
        Some(profile.order),
        profile.tail_bound,
    )
}

fn check_chi2(chi2: f64) -> Result<()> {
    if chi2 >= 0.0 {
        Ok(())
    } else {
        Err(Error::precondition(format!("χ² must be nonnegative, got {chi2}")))
    }
}

/// Total variation (and Kolmogorov) bound `√χ²/2`.
pub fn chi2_to_tv_bound(chi2: f64) -> Result<f64> {
    check_chi2(chi2)?;
    Ok(chi2.sqrt() / 2.0)
}

/// Kullback–Leibler bound `KL ≤ χ²`.
pub fn chi2_to_kl_bound(chi2: f64) -> Result<f64> {
    check_chi2(chi2)?;
    Ok(chi2)
}

/// `|F(y) − Φ(y)| ≤ √(min{Φ(y), 1−Φ(y)})·√χ²`.
pub fn chi2_to_nonuniform_bound(chi2: f64, y: f64) -> Result<f64> {
    check_chi2(chi2)?;
    if y.is_nan() {
        return Err(Error::precondition("y must not be NaN"));
    }
    Ok(normal_cdf(-y.abs()).sqrt() * chi2.sqrt())
}
