//! Exact piecewise-polynomial densities over rational breakpoints.
//!
//! A density is stored in an auxiliary variable `u` with rational breakpoints
//! and rational coefficients; the physical variable is `x = √(scale_sq)·u`.
//! The irrational factor is applied only when evaluating in `x`, so
//! convolution stays exact.

use num::{BigInt, BigRational, One, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Largest number of summands accepted by the convolution oracle.
pub const MAX_SUMMANDS: usize = 12;

fn q(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn q_frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn binomial_rows(n: usize) -> Vec<Vec<Rational>> {
    let mut rows: Vec<Vec<Rational>> = vec![vec![Rational::one()]];
    for i in 1..=n {
        let prev = &rows[i - 1];
        let mut row = vec![Rational::one(); i + 1];
        for k in 1..i {
            row[k] = &prev[k - 1] + &prev[k];
        }
        rows.push(row);
    }
    rows
}

/// Horner evaluation in exact arithmetic.
fn eval_exact(coeffs: &[Rational], u: &Rational) -> Rational {
    coeffs
        .iter()
        .rev()
        .fold(Rational::zero(), |acc, c| acc * u + c)
}

/// Coefficients of `p(m + v)` in powers of `v`.
fn taylor_shift(coeffs: &[Rational], m: &Rational) -> Vec<Rational> {
    let n = coeffs.len();
    let binom = binomial_rows(n);
    let mut out = vec![Rational::zero(); n];
    for (k, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let mut mpow = Rational::one();
        // c (m + v)^k = c Σ_l C(k,l) m^{k-l} v^l
        let mut powers = Vec::with_capacity(k + 1);
        for _ in 0..=k {
            powers.push(mpow.clone());
            mpow *= m;
        }
        for l in 0..=k {
            out[l] += c * &binom[k][l] * &powers[k - l];
        }
    }
    out
}

fn add_into(acc: &mut Vec<Rational>, p: &[Rational]) {
    if acc.len() < p.len() {
        acc.resize(p.len(), Rational::zero());
    }
    for (a, b) in acc.iter_mut().zip(p) {
        *a += b;
    }
}

/// An exact piecewise-polynomial density.
#[derive(Debug, Clone)]
pub struct PiecewisePolyDensity {
    breakpoints: Vec<Rational>,
    /// Monomial coefficients in `u`, lowest degree first, one row per piece.
    pieces: Vec<Vec<Rational>>,
    scale_sq: Rational,
    eval: EvalCache,
}

#[derive(Debug, Clone)]
struct EvalCache {
    scale: f64,
    breakpoints: Vec<f64>,
    centers: Vec<f64>,
    local: Vec<Vec<f64>>,
}

impl PiecewisePolyDensity {
    /// Builds a density from breakpoints in `u`, per-piece monomial
    /// coefficients in `u`, and `scale_sq` such that `x = √scale_sq · u`.
    pub fn new(breakpoints: Vec<Rational>, pieces: Vec<Vec<Rational>>, scale_sq: Rational) -> Result<Self> {
        if breakpoints.len() < 2 || pieces.len() + 1 != breakpoints.len() {
            return Err(Error::precondition("need one coefficient row per breakpoint interval"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::precondition("breakpoints must be strictly ascending"));
        }
        if scale_sq <= Rational::zero() {
            return Err(Error::precondition("scale_sq must be positive"));
        }
        let eval = EvalCache::build(&breakpoints, &pieces, &scale_sq);
        Ok(PiecewisePolyDensity {
            breakpoints,
            pieces,
            scale_sq,
            eval,
        })
    }

    /// `U[-1, 1]` in `u`, scaled to `U[-√3, √3]`.
    pub fn uniform() -> Self {
        Self::new(vec![q(-1), q(1)], vec![vec![q_frac(1, 2)]], q(3)).expect("valid uniform")
    }

    /// Symmetric `Beta(a, a)` recentred to `u ∈ [-1/2, 1/2]`, scaled to unit
    /// variance (`scale_sq = 4(2a+1)`).
    pub fn symmetric_beta(shape: u32) -> Result<Self> {
        if shape == 0 {
            return Err(Error::precondition("beta shape must be positive"));
        }
        let a = shape as usize;
        // (1/4 - u²)^{a-1}
        let mut poly = vec![Rational::one()];
        for _ in 1..a {
            let mut next = vec![Rational::zero(); poly.len() + 2];
            for (i, c) in poly.iter().enumerate() {
                next[i] += c * q_frac(1, 4);
                next[i + 2] -= c;
            }
            poly = next;
        }
        // 1/B(a,a) = (2a-1)! / ((a-1)!)²
        let fact = |n: usize| (1..=n).fold(BigInt::one(), |acc, v| acc * BigInt::from(v));
        let norm = Rational::new(fact(2 * a - 1), fact(a - 1) * fact(a - 1));
        for c in poly.iter_mut() {
            *c *= &norm;
        }
        Self::new(
            vec![q_frac(-1, 2), q_frac(1, 2)],
            vec![poly],
            q(4 * (2 * shape as i64 + 1)),
        )
    }

    pub fn pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn degree(&self) -> usize {
        self.pieces.iter().map(|p| p.len().saturating_sub(1)).max().unwrap_or(0)
    }

    pub fn scale_sq(&self) -> &Rational {
        &self.scale_sq
    }

    pub fn scale(&self) -> f64 {
        self.eval.scale
    }

    pub fn breakpoints_u(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn coefficients_u(&self) -> &[Vec<Rational>] {
        &self.pieces
    }

    /// Breakpoints in `x`, including the two ends of the support.
    pub fn breakpoints_x(&self) -> Vec<f64> {
        self.eval.breakpoints.iter().map(|b| b * self.eval.scale).collect()
    }

    pub fn support_x(&self) -> (f64, f64) {
        let b = &self.eval.breakpoints;
        (b[0] * self.eval.scale, b[b.len() - 1] * self.eval.scale)
    }

    /// Density in `u`.
    pub fn pdf_u(&self, u: f64) -> f64 {
        let b = &self.eval.breakpoints;
        if !(u >= b[0] && u <= b[b.len() - 1]) {
            return 0.0;
        }
        let idx = b.partition_point(|&v| v <= u).clamp(1, b.len() - 1) - 1;
        let v = u - self.eval.centers[idx];
        self.eval.local[idx].iter().rev().fold(0.0, |acc, &c| acc * v + c)
    }

    /// Density in `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        self.pdf_u(x / self.eval.scale) / self.eval.scale
    }

    /// Exact density value in `u` at a rational point; right-continuous at
    /// interior breakpoints.
    pub fn pdf_u_exact(&self, u: &Rational) -> Rational {
        let b = &self.breakpoints;
        if u < &b[0] || u > &b[b.len() - 1] {
            return Rational::zero();
        }
        let idx = b.partition_point(|v| v <= u).clamp(1, b.len() - 1) - 1;
        eval_exact(&self.pieces[idx], u)
    }

    /// Exact `∫ u^k p(u) du`.
    pub fn moment_u(&self, k: usize) -> Rational {
        let mut total = Rational::zero();
        for (i, poly) in self.pieces.iter().enumerate() {
            let (a, b) = (&self.breakpoints[i], &self.breakpoints[i + 1]);
            for (j, c) in poly.iter().enumerate() {
                let e = (j + k + 1) as i32;
                let anti = (pow(b, e) - pow(a, e)) / q(e as i64);
                total += c * anti;
            }
        }
        total
    }

    /// Exact `E X^k` for even `k` (odd moments carry an irrational factor).
    pub fn even_moment_x(&self, k: usize) -> Result<Rational> {
        if k % 2 != 0 {
            return Err(Error::precondition("only even moments are exactly rational"));
        }
        Ok(self.moment_u(k) * pow(&self.scale_sq, (k / 2) as i32))
    }

    /// Left and right limits at each interior breakpoint.
    pub fn jumps(&self) -> Vec<Rational> {
        (1..self.pieces.len())
            .map(|i| {
                let b = &self.breakpoints[i];
                eval_exact(&self.pieces[i], b) - eval_exact(&self.pieces[i - 1], b)
            })
            .collect()
    }

    pub fn is_continuous(&self) -> bool {
        self.jumps().iter().all(Zero::is_zero)
    }

    /// Minimum of the f64 density over a uniform grid of `points` per piece.
    pub fn grid_minimum(&self, points: usize) -> f64 {
        let b = &self.eval.breakpoints;
        let mut min = f64::INFINITY;
        for w in b.windows(2) {
            for i in 0..=points {
                let u = w[0] + (w[1] - w[0]) * i as f64 / points as f64;
                min = min.min(self.pdf_u(u));
            }
        }
        min
    }

    /// Exact convolution in `u`; both operands must share `scale_sq`.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        if self.scale_sq != other.scale_sq {
            return Err(Error::precondition("convolution operands must share a scale"));
        }
        let mut contributions: Vec<(Rational, Rational, Vec<Rational>)> = Vec::new();
        for (i, f) in self.pieces.iter().enumerate() {
            for (j, g) in other.pieces.iter().enumerate() {
                let (a, b) = (&self.breakpoints[i], &self.breakpoints[i + 1]);
                let (c, d) = (&other.breakpoints[j], &other.breakpoints[j + 1]);
                contributions.extend(convolve_pieces(f, a, b, g, c, d));
            }
        }
        let mut cuts: Vec<Rational> = contributions
            .iter()
            .flat_map(|(lo, hi, _)| [lo.clone(), hi.clone()])
            .collect();
        cuts.sort();
        cuts.dedup();
        let mut pieces = Vec::with_capacity(cuts.len() - 1);
        for w in cuts.windows(2) {
            let mut acc: Vec<Rational> = Vec::new();
            for (lo, hi, poly) in &contributions {
                if lo <= &w[0] && hi >= &w[1] {
                    add_into(&mut acc, poly);
                }
            }
            while acc.len() > 1 && acc.last().map_or(false, Zero::is_zero) {
                acc.pop();
            }
            if acc.is_empty() {
                acc.push(Rational::zero());
            }
            pieces.push(acc);
        }
        Self::new(cuts, pieces, self.scale_sq.clone())
    }

    /// Density of `(X_1 + ... + X_n)/√n` for i.i.d. copies of this density.
    pub fn normalized_sum(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::precondition("need at least one summand"));
        }
        if n > MAX_SUMMANDS {
            return Err(Error::capacity(format!(
                "exact convolution oracle supports at most {MAX_SUMMANDS} summands"
            )));
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.convolve(self)?;
        }
        acc.rescaled(q(n as i64))
    }

    /// Same `u`-density, physical scale divided by `√divisor`.
    pub fn rescaled(&self, divisor: Rational) -> Result<Self> {
        Self::new(
            self.breakpoints.clone(),
            self.pieces.clone(),
            &self.scale_sq / divisor,
        )
    }
}

fn pow(r: &Rational, e: i32) -> Rational {
    num::pow::pow(r.clone(), e as usize)
}

impl EvalCache {
    fn build(breakpoints: &[Rational], pieces: &[Vec<Rational>], scale_sq: &Rational) -> Self {
        let mut centers = Vec::with_capacity(pieces.len());
        let mut local = Vec::with_capacity(pieces.len());
        for (i, poly) in pieces.iter().enumerate() {
            let m = (&breakpoints[i] + &breakpoints[i + 1]) / q(2);
            let shifted = taylor_shift(poly, &m);
            centers.push(to_f64(&m));
            local.push(shifted.iter().map(to_f64).collect());
        }
        EvalCache {
            scale: to_f64(scale_sq).sqrt(),
            breakpoints: breakpoints.iter().map(to_f64).collect(),
            centers,
            local,
        }
    }
}

/// `∫ f(s) g(t - s) ds` for `f` on `[a,b]` and `g` on `[c,d]`, as polynomial
/// pieces in `t`.
fn convolve_pieces(
    f: &[Rational],
    a: &Rational,
    b: &Rational,
    g: &[Rational],
    c: &Rational,
    d: &Rational,
) -> Vec<(Rational, Rational, Vec<Rational>)> {
    let df = f.len() - 1;
    let dg = g.len() - 1;
    let dim = df + dg + 2;
    let binom = binomial_rows(dim);

    // P[i][j]: coefficient of s^i t^j in f(s) g(t - s)
    let mut p = vec![vec![Rational::zero(); dim]; dim];
    for (pi, alpha) in f.iter().enumerate() {
        if alpha.is_zero() {
            continue;
        }
        for (qi, beta) in g.iter().enumerate() {
            if beta.is_zero() {
                continue;
            }
            let ab = alpha * beta;
            for r in 0..=qi {
                let term = &ab * &binom[qi][r];
                if r % 2 == 0 {
                    p[pi + r][qi - r] += term;
                } else {
                    p[pi + r][qi - r] -= term;
                }
            }
        }
    }
    // antiderivative in s
    let mut anti = vec![vec![Rational::zero(); dim]; dim + 1];
    for i in 0..dim {
        for j in 0..dim {
            if !p[i][j].is_zero() {
                anti[i + 1][j] = &p[i][j] / q((i + 1) as i64);
            }
        }
    }

    // s = e0 + e1 t
    let substitute = |e0: &Rational, e1: bool| -> Vec<Rational> {
        let mut out = vec![Rational::zero(); 2 * dim + 1];
        for (i, row) in anti.iter().enumerate() {
            let mut e0_pows = Vec::with_capacity(i + 1);
            let mut acc = Rational::one();
            for _ in 0..=i {
                e0_pows.push(acc.clone());
                acc *= e0;
            }
            for (j, coef) in row.iter().enumerate() {
                if coef.is_zero() {
                    continue;
                }
                if e1 {
                    for l in 0..=i {
                        out[l + j] += coef * &binom_big(&binom, i, l) * &e0_pows[i - l];
                    }
                } else {
                    out[j] += coef * &e0_pows[i];
                }
            }
        }
        while out.len() > 1 && out.last().map_or(false, Zero::is_zero) {
            out.pop();
        }
        out
    };

    let mut ts = vec![a + c, a + d, b + c, b + d];
    ts.sort();
    ts.dedup();
    let two = q(2);
    let mut out = Vec::new();
    for w in ts.windows(2) {
        let mid = (&w[0] + &w[1]) / &two;
        // lower limit max(a, t - d), upper limit min(b, t - c)
        let lower_is_const = &mid - d <= *a;
        let upper_is_const = &mid - c >= *b;
        let lower_at_mid = if lower_is_const { a.clone() } else { &mid - d };
        let upper_at_mid = if upper_is_const { b.clone() } else { &mid - c };
        if upper_at_mid <= lower_at_mid {
            continue;
        }
        let upper = if upper_is_const {
            substitute(b, false)
        } else {
            substitute(&-c.clone(), true)
        };
        let lower = if lower_is_const {
            substitute(a, false)
        } else {
            substitute(&-d.clone(), true)
        };
        let mut poly = upper;
        let neg: Vec<Rational> = lower.into_iter().map(|v| -v).collect();
        add_into(&mut poly, &neg);
        out.push((w[0].clone(), w[1].clone(), poly));
    }
    out
}

fn binom_big(rows: &[Vec<Rational>], n: usize, k: usize) -> Rational {
    if n < rows.len() {
        rows[n][k].clone()
    } else {
        let extended = binomial_rows(n);
        extended[n][k].clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_moments_exact() {
        let u = PiecewisePolyDensity::uniform();
        assert_eq!(u.moment_u(0), q(1));
        assert_eq!(u.even_moment_x(2).unwrap(), q(1));
        assert_eq!(u.even_moment_x(4).unwrap(), q_frac(9, 5));
    }

    #[test]
    fn beta_shapes_are_standardized() {
        for a in 1..=6 {
            let b = PiecewisePolyDensity::symmetric_beta(a).unwrap();
            assert_eq!(b.moment_u(0), q(1), "shape {a}");
            assert_eq!(b.moment_u(1), q(0));
            assert_eq!(b.even_moment_x(2).unwrap(), q(1));
        }
    }

    #[test]
    fn two_uniforms_make_a_triangle() {
        let s2 = PiecewisePolyDensity::uniform().normalized_sum(2).unwrap();
        assert_eq!(s2.pieces(), 2);
        assert!(s2.is_continuous());
        let (lo, hi) = s2.support_x();
        assert!((lo + 6f64.sqrt()).abs() < 1e-14 && (hi - 6f64.sqrt()).abs() < 1e-14);
        assert!((s2.pdf(0.0) - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        assert_eq!(s2.moment_u(0), q(1));
        assert_eq!(s2.even_moment_x(2).unwrap(), q(1));
    }

    #[test]
    fn irwin_hall_matches_closed_form() {
        // density of the sum of n U[0,1]: Σ_k (-1)^k C(n,k) (y-k)_+^{n-1} / (n-1)!
        let n = 5usize;
        let s = PiecewisePolyDensity::uniform().normalized_sum(n).unwrap();
        let fact: f64 = (1..n).map(|v| v as f64).product();
        for i in 0..=50 {
            let y = n as f64 * i as f64 / 50.0;
            let mut ih = 0.0;
            for k in 0..=n {
                let t = y - k as f64;
                if t > 0.0 {
                    let c = crate::special::binomial_u128(n as u64, k as u64) as f64;
                    ih += if k % 2 == 0 { c } else { -c } * t.powi(n as i32 - 1);
                }
            }
            ih /= fact;
            // u = 2y - n for U[-1,1] summands, density transforms by 1/2
            let u = 2.0 * y - n as f64;
            assert!((s.pdf_u(u) - ih / 2.0).abs() < 1e-13, "y={y}");
        }
    }

    #[test]
    fn sums_are_standardized_and_nonnegative() {
        let base = PiecewisePolyDensity::uniform();
        for n in 1..=8 {
            let s = base.normalized_sum(n).unwrap();
            assert_eq!(s.moment_u(0), q(1));
            assert_eq!(s.even_moment_x(2).unwrap(), q(1));
            assert!(s.grid_minimum(20) >= -1e-15);
            if n >= 2 {
                assert!(s.is_continuous());
            }
        }
    }

    #[test]
    fn convolution_is_associative() {
        let base = PiecewisePolyDensity::uniform();
        let four = base.normalized_sum(4).unwrap();
        let two_u = base.convolve(&base).unwrap();
        let paired = two_u.convolve(&two_u).unwrap().rescaled(q(4)).unwrap();
        for i in 0..=100 {
            let x = -3.5 + 7.0 * i as f64 / 100.0;
            assert!((four.pdf(x) - paired.pdf(x)).abs() < 1e-10);
        }
        assert_eq!(four.coefficients_u(), paired.coefficients_u());
    }

    #[test]
    fn capacity_and_preconditions() {
        let base = PiecewisePolyDensity::uniform();
        assert!(matches!(base.normalized_sum(13), Err(Error::Capacity(_))));
        assert!(base.normalized_sum(0).is_err());
        assert!(PiecewisePolyDensity::new(vec![q(1), q(0)], vec![vec![q(1)]], q(1)).is_err());
        let other = PiecewisePolyDensity::symmetric_beta(2).unwrap();
        assert!(base.convolve(&other).is_err());
    }

    #[test]
    fn twelve_summands_evaluate_stably() {
        let s = PiecewisePolyDensity::uniform().normalized_sum(12).unwrap();
        assert_eq!(s.even_moment_x(2).unwrap(), q(1));
        // Irwin–Hall, n = 12, at its centre: 655177/1663200
        assert!((s.pdf(0.0) - 655177.0 / 1663200.0).abs() < 1e-13);
    }
}
