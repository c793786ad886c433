//! Standardized test densities (mean 0, variance 1) and normalized sums.
//!
//! Names accepted by [`StandardizedDensity::from_name`]:
//! `uniform`, `normal`, `beta:<shape>`, `mixture:<mu>`, and
//! `<name>*<n>` for the normalized sum of `n` copies of a piecewise density.

mod piecewise;

use std::fmt;
use std::sync::Arc;

use libm::lgamma as ln_gamma;

pub use piecewise::{PiecewisePolyDensity, Rational, MAX_SUMMANDS};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breakpoints, Integral, QuadratureSpec};
use crate::special::{normal_ln_pdf, normal_pdf};

/// Integer Beta shapes up to this value use the exact polynomial form.
pub const MAX_EXACT_BETA_SHAPE: u32 = 20;

/// Tolerance on the three standardization integrals.
pub const STANDARDIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub(crate) enum Family {
    Normal,
    Piecewise(Arc<PiecewisePolyDensity>),
    /// Symmetric Beta(a, a) on `[-w, w]`, `w = √(2a+1)`.
    Beta { shape: f64, half_width: f64, ln_norm: f64 },
    /// `½N(-μ, 1-μ²) + ½N(μ, 1-μ²)`.
    Mixture { mu: f64, sd: f64 },
}

#[derive(Debug, Clone)]
pub struct StandardizedDensity {
    family: Family,
    symmetric: bool,
    label: String,
}

/// The three standardization integrals.
#[derive(Debug, Clone, Copy)]
pub struct Standardization {
    pub mass: Integral,
    pub mean: Integral,
    pub second_moment: Integral,
}

impl Standardization {
    pub fn max_defect(&self) -> f64 {
        (self.mass.value - 1.0)
            .abs()
            .max(self.mean.value.abs())
            .max((self.second_moment.value - 1.0).abs())
    }
}

pub fn make_uniform() -> StandardizedDensity {
    StandardizedDensity::from_piecewise(PiecewisePolyDensity::uniform(), "uniform", true)
}

pub fn make_normal() -> StandardizedDensity {
    StandardizedDensity {
        family: Family::Normal,
        symmetric: true,
        label: "normal".into(),
    }
}

/// Symmetric Beta(shape, shape), recentred and scaled to unit variance.
pub fn make_scaled_beta(shape: f64) -> Result<StandardizedDensity> {
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(Error::precondition("beta shape must be positive and finite"));
    }
    let label = format!("beta:{shape}");
    if shape.fract() == 0.0 && shape <= MAX_EXACT_BETA_SHAPE as f64 {
        let pp = PiecewisePolyDensity::symmetric_beta(shape as u32)?;
        return Ok(StandardizedDensity::from_piecewise(pp, label, true));
    }
    let half_width = (2.0 * shape + 1.0).sqrt();
    let ln_beta = 2.0 * ln_gamma(shape) - ln_gamma(2.0 * shape);
    Ok(StandardizedDensity {
        family: Family::Beta {
            shape,
            half_width,
            ln_norm: -ln_beta - (2.0 * half_width).ln(),
        },
        symmetric: true,
        label,
    })
}

/// Two-component symmetric normal mixture with component means `±mu`.
pub fn make_mixture(mu: f64) -> Result<StandardizedDensity> {
    if !(0.0..1.0).contains(&mu) {
        return Err(Error::precondition("mixture offset must lie in [0, 1)"));
    }
    Ok(StandardizedDensity {
        family: Family::Mixture {
            mu,
            sd: (1.0 - mu * mu).sqrt(),
        },
        symmetric: true,
        label: format!("mixture:{mu}"),
    })
}

/// Exact density of `(X_1 + ... + X_n)/√n` for a piecewise-polynomial base.
pub fn normalized_sum_density(base: &StandardizedDensity, n: usize) -> Result<PiecewisePolyDensity> {
    match &base.family {
        Family::Piecewise(pp) => pp.normalized_sum(n),
        _ => Err(Error::capacity(format!(
            "{} is not a bounded piecewise polynomial density",
            base.label
        ))),
    }
}

impl StandardizedDensity {
    pub fn from_piecewise(pp: PiecewisePolyDensity, label: impl Into<String>, symmetric: bool) -> Self {
        StandardizedDensity {
            family: Family::Piecewise(Arc::new(pp)),
            symmetric,
            label: label.into(),
        }
    }

    /// Parses a catalog name; see the module docs.
    pub fn from_name(name: &str) -> Result<Self> {
        let name = name.trim();
        if let Some((base, n)) = name.rsplit_once('*') {
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad summand count in '{name}'")))?;
            return Self::from_name(base)?.normalized_sum(n);
        }
        let (kind, arg) = match name.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (name, None),
        };
        let number = |what: &str| -> Result<f64> {
            arg.ok_or_else(|| Error::Parse(format!("'{kind}' needs a {what}, e.g. {kind}:2")))?
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad {what} in '{name}'")))
        };
        match kind {
            "uniform" if arg.is_none() => Ok(make_uniform()),
            "normal" if arg.is_none() => Ok(make_normal()),
            "beta" => make_scaled_beta(number("shape")?),
            "mixture" => make_mixture(number("offset")?),
            _ => Err(Error::Parse(format!("unknown density '{name}'"))),
        }
    }

    /// Normalized sum of `n` i.i.d. copies, as a catalog density.
    pub fn normalized_sum(&self, n: usize) -> Result<Self> {
        if n == 1 {
            return Ok(self.clone());
        }
        let pp = normalized_sum_density(self, n)?;
        Ok(Self::from_piecewise(pp, format!("{}*{n}", self.label), self.symmetric))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_normal(&self) -> bool {
        matches!(self.family, Family::Normal)
    }

    pub(crate) fn family(&self) -> &Family {
        &self.family
    }

    pub fn piecewise(&self) -> Option<&PiecewisePolyDensity> {
        match &self.family {
            Family::Piecewise(pp) => Some(pp),
            _ => None,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match &self.family {
            Family::Normal | Family::Mixture { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Family::Piecewise(pp) => pp.support_x(),
            Family::Beta { half_width, .. } => (-half_width, *half_width),
        }
    }

    pub fn is_bounded(&self) -> bool {
        let (lo, hi) = self.support();
        lo.is_finite() && hi.is_finite()
    }

    /// Interior points where the density or its derivatives may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.family {
            Family::Piecewise(pp) => {
                let b = pp.breakpoints_x();
                b[1..b.len() - 1].to_vec()
            }
            Family::Mixture { mu, .. } if *mu > 0.0 => vec![-mu, 0.0, *mu],
            _ => vec![0.0],
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match &self.family {
            Family::Normal => normal_pdf(x),
            Family::Piecewise(pp) => pp.pdf(x),
            Family::Beta { .. } | Family::Mixture { .. } => {
                let l = self.ln_pdf(x);
                if l == f64::NEG_INFINITY {
                    0.0
                } else {
                    l.exp()
                }
            }
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match &self.family {
            Family::Normal => normal_ln_pdf(x),
            Family::Piecewise(pp) => pp.pdf(x).ln(),
            Family::Beta {
                shape,
                half_width,
                ln_norm,
            } => {
                if x.abs() >= *half_width {
                    return f64::NEG_INFINITY;
                }
                let t = 0.5 * (1.0 + x / half_width);
                (shape - 1.0) * (t.ln() + (-t).ln_1p()) + ln_norm
            }
            Family::Mixture { mu, sd } => {
                let a = normal_ln_pdf((x - mu) / sd);
                let b = normal_ln_pdf((x + mu) / sd);
                let m = a.max(b);
                if m == f64::NEG_INFINITY {
                    return m;
                }
                m + ((a - m).exp() + (b - m).exp()).ln() - std::f64::consts::LN_2 - sd.ln()
            }
        }
    }

    /// `∫ f(x) p(x) dx` over the support.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F, spec: &QuadratureSpec) -> Result<Integral> {
        let (lo, hi) = self.support();
        integrate_with_breakpoints(|x| f(x) * self.pdf(x), lo, hi, &self.breakpoints(), spec)
    }

    pub fn standardization(&self, spec: &QuadratureSpec) -> Result<Standardization> {
        Ok(Standardization {
            mass: self.expect(|_| 1.0, spec)?,
            mean: self.expect(|x| x, spec)?,
            second_moment: self.expect(|x| x * x, spec)?,
        })
    }

    /// Largest `|p(x) - p(-x)|` over `points` grid points on the support
    /// (clipped to `[-10, 10]`).
    pub fn symmetry_defect(&self, points: usize) -> f64 {
        let (_, hi) = self.support();
        let r = hi.min(10.0);
        (0..=points)
            .map(|i| {
                let x = r * i as f64 / points as f64;
                (self.pdf(x) - self.pdf(-x)).abs()
            })
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for StandardizedDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog() -> Vec<StandardizedDensity> {
        vec![
            make_uniform(),
            make_normal(),
            make_scaled_beta(2.0).unwrap(),
            make_scaled_beta(2.5).unwrap(),
            make_scaled_beta(0.75).unwrap(),
            make_mixture(0.5).unwrap(),
        ]
    }

    #[test]
    fn uniform_values() {
        let u = make_uniform();
        assert!((u.pdf(0.0) - 1.0 / (2.0 * 3f64.sqrt())).abs() < 1e-15);
        assert_eq!(u.pdf(2.0), 0.0);
        assert!(u.is_symmetric());
    }

    #[test]
    fn catalog_is_standardized() {
        let spec = QuadratureSpec::default();
        for d in catalog() {
            let s = d.standardization(&spec).unwrap();
            assert!(s.max_defect() < STANDARDIZATION_TOLERANCE, "{d}: {s:?}");
            assert!(d.symmetry_defect(200) < 1e-13, "{d}");
        }
    }

    #[test]
    fn beta_one_is_uniform() {
        let b = make_scaled_beta(1.0).unwrap();
        let u = make_uniform();
        for i in 0..=400 {
            let x = -2.0 + 4.0 * i as f64 / 400.0;
            assert!((b.pdf(x) - u.pdf(x)).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn analytic_and_exact_beta_agree() {
        let exact = make_scaled_beta(3.0).unwrap();
        let w = 7f64.sqrt();
        let ln_beta = 2.0 * ln_gamma(3.0) - ln_gamma(6.0);
        let analytic = StandardizedDensity {
            family: Family::Beta {
                shape: 3.0,
                half_width: w,
                ln_norm: -ln_beta - (2.0 * w).ln(),
            },
            symmetric: true,
            label: "analytic".into(),
        };
        for i in 1..200 {
            let x = -w + 2.0 * w * i as f64 / 200.0;
            assert!((exact.pdf(x) - analytic.pdf(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn sums_are_standardized_by_quadrature() {
        let spec = QuadratureSpec::default();
        for n in 1..=6 {
            let s = make_uniform().normalized_sum(n).unwrap();
            assert!(s.standardization(&spec).unwrap().max_defect() < STANDARDIZATION_TOLERANCE);
        }
    }

    #[test]
    fn triangular_peak() {
        let s2 = normalized_sum_density(&make_uniform(), 2).unwrap();
        assert!((s2.pdf(0.0) - 1.0 / 6f64.sqrt()).abs() < 1e-14);
        let (lo, hi) = s2.support_x();
        assert!((hi - 6f64.sqrt()).abs() < 1e-14 && (lo + hi).abs() < 1e-14);
    }

    #[test]
    fn unbounded_bases_are_refused() {
        assert!(matches!(
            normalized_sum_density(&make_normal(), 2),
            Err(Error::Capacity(_))
        ));
        assert!(matches!(
            normalized_sum_density(&make_scaled_beta(2.5).unwrap(), 2),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn names_parse() {
        assert_eq!(StandardizedDensity::from_name("uniform").unwrap().label(), "uniform");
        assert_eq!(StandardizedDensity::from_name("beta:2").unwrap().label(), "beta:2");
        assert_eq!(StandardizedDensity::from_name("uniform*3").unwrap().label(), "uniform*3");
        assert!(StandardizedDensity::from_name("mixture:0.3").is_ok());
        assert!(matches!(StandardizedDensity::from_name("cauchy"), Err(Error::Parse(_))));
        assert!(matches!(StandardizedDensity::from_name("beta"), Err(Error::Parse(_))));
        assert!(StandardizedDensity::from_name("beta:-1").is_err());
        assert!(StandardizedDensity::from_name("mixture:1").is_err());
    }
}
