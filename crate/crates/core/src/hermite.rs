//! Probabilists' Hermite polynomials `H_n`, defined by the generating function
//! `Σ H_n(x) zⁿ/n! = e^{xz - z²/2}`.
//!
//! Evaluation runs the three-term recurrence `H_{n+1} = x H_n - n H_{n-1}`.
//! The derivative form `H_{n+1} = x H_n - H_n'` is the same identity with
//! `H_n' = n H_{n-1}`; it is kept as a check in the tests rather than used on
//! the hot path.
//!
//! Values grow like `√(n!)·|x|ⁿ`, so series code should prefer
//! [`normalized`] (`H_n/√n!`) or [`log_abs`], which never overflow for the
//! orders supported here.

use crate::error::{Error, Result};
use crate::special::{binomial_u128, ln_binomial, ln_factorial};

pub const DEFAULT_MAX_ORDER: usize = 256;

/// Tolerance on `α² + β² = 1` for the addition formulas.
pub const ADDITION_TOLERANCE: f64 = 1e-12;

/// Largest order for which exact integer coefficients are produced.
pub const MAX_EXACT_COEFFICIENT_ORDER: usize = 50;

/// Evaluator carrying the configured maximum order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hermite {
    pub max_order: usize,
}

impl Default for Hermite {
    fn default() -> Self {
        Hermite {
            max_order: DEFAULT_MAX_ORDER,
        }
    }
}

impl Hermite {
    pub fn with_max_order(max_order: usize) -> Self {
        Hermite { max_order }
    }

    fn check(&self, n: usize) -> Result<()> {
        if n > self.max_order {
            return Err(Error::capacity(format!(
                "Hermite order {n} exceeds configured maximum {}",
                self.max_order
            )));
        }
        Ok(())
    }

    /// `H_n(x)`.
    pub fn eval(&self, n: usize, x: f64) -> Result<f64> {
        self.check(n)?;
        Ok(raw_eval(n, x))
    }

    /// `H_n'(x) = n H_{n-1}(x)`.
    pub fn derivative(&self, n: usize, x: f64) -> Result<f64> {
        self.check(n)?;
        Ok(raw_derivative(n, x))
    }

    /// `H_n(x)/√(n!)`.
    pub fn normalized(&self, n: usize, x: f64) -> Result<f64> {
        self.check(n)?;
        Ok(raw_normalized(n, x))
    }

    /// `(ln|H_n(x)|, sign)`; sign is `0.0` at a root.
    pub fn log_abs(&self, n: usize, x: f64) -> Result<(f64, f64)> {
        self.check(n)?;
        Ok(raw_log_abs(n, x))
    }

    /// `Σ_{k=0}^m C(m,k) H_{m-k}(x) H_k(y) α^{m-k} β^k`, which equals
    /// `H_m(αx + βy)` whenever `α² + β² = 1`.
    pub fn addition_formula(&self, m: usize, x: f64, y: f64, alpha: f64, beta: f64) -> Result<f64> {
        self.check(m)?;
        check_unit(alpha, beta)?;
        let hx = all_values(m, x);
        let hy = all_values(m, y);
        let terms = (0..=m).map(|k| {
            binom_f64(m, k) * hx[m - k] * hy[k] * alpha.powi((m - k) as i32) * beta.powi(k as i32)
        });
        Ok(crate::special::compensated_sum(terms))
    }

    /// Differentiated addition formula:
    /// `Σ_{k=0}^m C(m,k) H_{m-k}(x) H_k'(y) α^{m-k} β^{k-1} = H_m'(αx + βy)`.
    pub fn addition_formula_derivative(
        &self,
        m: usize,
        x: f64,
        y: f64,
        alpha: f64,
        beta: f64,
    ) -> Result<f64> {
        self.check(m)?;
        check_unit(alpha, beta)?;
        if beta == 0.0 {
            return Err(Error::precondition("differentiated addition formula needs β ≠ 0"));
        }
        let hx = all_values(m, x);
        let hy = all_values(m, y);
        // H_0' = 0 drops the k = 0 term
        let terms = (1..=m).map(|k| {
            binom_f64(m, k)
                * hx[m - k]
                * (k as f64 * hy[k - 1])
                * alpha.powi((m - k) as i32)
                * beta.powi(k as i32 - 1)
        });
        Ok(crate::special::compensated_sum(terms))
    }
}

fn check_unit(alpha: f64, beta: f64) -> Result<()> {
    let norm = alpha * alpha + beta * beta;
    if (norm - 1.0).abs() > ADDITION_TOLERANCE {
        return Err(Error::precondition(format!(
            "addition formula needs α²+β² = 1, got {norm}"
        )));
    }
    Ok(())
}

fn binom_f64(m: usize, k: usize) -> f64 {
    if m <= 60 {
        binomial_u128(m as u64, k as u64) as f64
    } else {
        ln_binomial(m as u64, k as u64).exp()
    }
}

/// `H_n(x)` using the default maximum order.
pub fn hermite_eval(n: usize, x: f64) -> Result<f64> {
    Hermite::default().eval(n, x)
}

/// `H_n'(x)` using the default maximum order.
pub fn hermite_derivative_eval(n: usize, x: f64) -> Result<f64> {
    Hermite::default().derivative(n, x)
}

pub fn addition_formula_eval(m: usize, x: f64, y: f64, alpha: f64, beta: f64) -> Result<f64> {
    Hermite::default().addition_formula(m, x, y, alpha, beta)
}

pub fn addition_formula_derivative_eval(m: usize, x: f64, y: f64, alpha: f64, beta: f64) -> Result<f64> {
    Hermite::default().addition_formula_derivative(m, x, y, alpha, beta)
}

/// `H_n(x)` with no order check.
pub(crate) fn raw_eval(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..n {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

pub(crate) fn raw_derivative(n: usize, x: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * raw_eval(n - 1, x)
    }
}

/// `[H_0(x), ..., H_n(x)]`.
pub fn all_values(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(x);
    }
    for k in 1..n {
        let next = x * out[k] - k as f64 * out[k - 1];
        out.push(next);
    }
    out
}

/// `[H_0(x)/√0!, ..., H_n(x)/√n!]` via
/// `Ĥ_{k+1} = (x Ĥ_k - √k Ĥ_{k-1}) / √(k+1)`.
pub fn normalized_all(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(x);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = (x * out[k] - kf.sqrt() * out[k - 1]) / (kf + 1.0).sqrt();
        out.push(next);
    }
    out
}

/// `H_n(x)/√(n!)` with no order check and no allocation.
pub(crate) fn raw_normalized(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..n {
        let kf = k as f64;
        let next = (x * cur - kf.sqrt() * prev) / (kf + 1.0).sqrt();
        prev = cur;
        cur = next;
    }
    cur
}

fn raw_log_abs(n: usize, x: f64) -> (f64, f64) {
    // normalized recurrence with periodic rescaling; ln|H_n| = ln|Ĥ_n| + ln(n!)/2
    const BIG: f64 = 1e150;
    let (mut prev, mut cur) = (0.0f64, 1.0f64);
    let mut log_scale = 0.0;
    for k in 0..n {
        let kf = k as f64;
        let next = (x * cur - kf.sqrt() * prev) / (kf + 1.0).sqrt();
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            cur /= BIG;
            prev /= BIG;
            log_scale += BIG.ln();
        }
    }
    if cur == 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    (cur.abs().ln() + log_scale + 0.5 * ln_factorial(n as u64), cur.signum())
}

/// Exact monomial-basis coefficients of `H_n` (lowest degree first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HermitePoly {
    pub order: usize,
    pub coefficients: Vec<i128>,
}

impl HermitePoly {
    pub fn new(order: usize) -> Result<Self> {
        if order > MAX_EXACT_COEFFICIENT_ORDER {
            return Err(Error::capacity(format!(
                "exact coefficients limited to order {MAX_EXACT_COEFFICIENT_ORDER}"
            )));
        }
        let mut prev: Vec<i128> = vec![];
        let mut cur: Vec<i128> = vec![1];
        for k in 0..order {
            let mut next = vec![0i128; cur.len() + 1];
            for (i, &c) in cur.iter().enumerate() {
                next[i + 1] += c;
            }
            for (i, &c) in prev.iter().enumerate() {
                next[i] -= k as i128 * c;
            }
            prev = cur;
            cur = next;
        }
        Ok(HermitePoly {
            order,
            coefficients: cur,
        })
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * x + c as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Taylor coefficients of e^{xz - z²/2} in z, built by multiplying the
    /// two exponential series; an independent route to H_n(x).
    fn generating_function_oracle(n: usize, x: f64) -> f64 {
        // [z^n] e^{xz} e^{-z²/2} = Σ_{2j + i = n} x^i/i! · (-1/2)^j/j!
        let mut acc = 0.0;
        let mut j = 0;
        while 2 * j <= n {
            let i = n - 2 * j;
            let term = x.powi(i as i32) / (1..=i).map(|v| v as f64).product::<f64>()
                * (-0.5f64).powi(j as i32)
                / (1..=j).map(|v| v as f64).product::<f64>();
            acc += term;
            j += 1;
        }
        acc * (1..=n).map(|v| v as f64).product::<f64>()
    }

    #[test]
    fn explicit_low_orders() {
        assert_eq!(hermite_eval(0, 3.7).unwrap(), 1.0);
        assert_eq!(hermite_eval(1, -2.5).unwrap(), -2.5);
        assert_eq!(hermite_eval(2, 0.0).unwrap(), -1.0);
        assert_eq!(hermite_eval(3, 2.0).unwrap(), 2.0);
        assert_eq!(hermite_eval(4, 2.0).unwrap(), -5.0);
        assert!((generating_function_oracle(4, 2.0) + 5.0).abs() < 1e-14);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(hermite_derivative_eval(2, 3.0).unwrap(), 6.0);
        assert_eq!(hermite_derivative_eval(0, 1.3).unwrap(), 0.0);
        assert_eq!(hermite_derivative_eval(3, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn order_cap_is_enforced() {
        assert!(matches!(hermite_eval(257, 0.1), Err(Error::Capacity(_))));
        assert!(Hermite::with_max_order(300).eval(257, 0.1).is_ok());
    }

    #[test]
    fn matches_generating_function() {
        for n in 0..=12 {
            for &x in &[-2.5, -1.0, 0.0, 0.3, 1.7, 3.0] {
                let a = hermite_eval(n, x).unwrap();
                let b = generating_function_oracle(n, x);
                assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn exact_coefficients() {
        assert_eq!(HermitePoly::new(3).unwrap().coefficients, vec![0, -3, 0, 1]);
        assert_eq!(HermitePoly::new(4).unwrap().coefficients, vec![3, 0, -6, 0, 1]);
        for n in 0..=MAX_EXACT_COEFFICIENT_ORDER {
            let p = HermitePoly::new(n).unwrap();
            assert_eq!(p.degree(), n);
            assert_eq!(*p.coefficients.last().unwrap(), 1);
        }
        assert!(HermitePoly::new(51).is_err());
    }

    #[test]
    fn recurrence_identity_on_grid() {
        // H_{n+1} = x H_n - H_n'
        for n in 0..=50 {
            for i in 0..=200 {
                let x = -10.0 + 0.1 * i as f64;
                let lhs = raw_eval(n + 1, x);
                let rhs = x * raw_eval(n, x) - raw_derivative(n, x);
                assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn derivative_matches_rearranged_recurrence() {
        for n in 0..=40 {
            for &x in &[-3.3, -0.2, 0.9, 4.1] {
                let direct = raw_derivative(n, x);
                let rearranged = x * raw_eval(n, x) - raw_eval(n + 1, x);
                assert!((direct - rearranged).abs() <= 1e-12 * (1.0 + rearranged.abs()) * (n as f64 + 1.0));
            }
        }
    }

    #[test]
    fn normalized_and_log_abs_agree_with_direct() {
        let fact = |n: usize| (1..=n).map(|v| v as f64).product::<f64>();
        for n in [0, 1, 5, 17, 30] {
            for &x in &[-2.0, 0.5, 3.3] {
                let direct = raw_eval(n, x);
                let norm = normalized_all(n, x)[n];
                assert!((norm * fact(n).sqrt() - direct).abs() <= 1e-10 * direct.abs().max(1.0));
                let (l, s) = raw_log_abs(n, x);
                assert!((s * l.exp() - direct).abs() <= 1e-10 * direct.abs().max(1.0));
            }
        }
        // far beyond f64 range of H_n itself
        let (l, s) = Hermite::default().log_abs(256, 100.0).unwrap();
        assert!(l.is_finite() && s == 1.0);
        // He_n(x) = xⁿ Σ_k (−1)^k n!/(k!(n−2k)! 2^k) x^{−2k}
        let mut term = 1.0f64;
        let mut series = 1.0;
        for k in 0..128 {
            let m = (256 - 2 * k) as f64;
            term *= -m * (m - 1.0) / (2.0 * (k + 1) as f64 * 1e4);
            series += term;
        }
        assert!((l - 256.0 * 100f64.ln() - series.ln()).abs() < 1e-10);
    }

    #[test]
    fn addition_formula_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = addition_formula_eval(2, 1.0, 1.0, s, s).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        for m in 0..8 {
            let a = addition_formula_eval(m, 0.7, -1.9, 1.0, 0.0).unwrap();
            assert!((a - hermite_eval(m, 0.7).unwrap()).abs() < 1e-12);
        }
        let v = addition_formula_eval(5, 0.3, -0.7, 0.6, 0.8).unwrap();
        let w = hermite_eval(5, 0.6 * 0.3 - 0.8 * 0.7).unwrap();
        assert!((v - w).abs() < 1e-12);
        assert!(matches!(
            addition_formula_eval(3, 0.1, 0.2, 0.6, 0.7),
            Err(Error::Precondition(_))
        ));
        assert!(addition_formula_derivative_eval(3, 0.1, 0.2, 1.0, 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn addition_formula_fuzz(m in 0usize..=20, x in -4.0f64..4.0, y in -4.0f64..4.0,
                                 theta in 0.0f64..std::f64::consts::TAU) {
            let (beta, alpha) = theta.sin_cos();
            let lhs = addition_formula_eval(m, x, y, alpha, beta).unwrap();
            let rhs = hermite_eval(m, alpha * x + beta * y).unwrap();
            // relative to the magnitude of the summands, which bounds cancellation
            let scale = (0..=m).map(|k| {
                binom_f64(m, k) * raw_eval(m - k, x).abs() * raw_eval(k, y).abs()
                    * alpha.abs().powi((m - k) as i32) * beta.abs().powi(k as i32)
            }).sum::<f64>().max(rhs.abs()).max(1.0);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * scale, "m={} lhs={} rhs={}", m, lhs, rhs);
        }

        #[test]
        fn differentiated_addition_fuzz(m in 1usize..=20, x in -4.0f64..4.0, y in -4.0f64..4.0,
                                        theta in 0.05f64..3.0) {
            let (beta, alpha) = theta.sin_cos();
            let lhs = addition_formula_derivative_eval(m, x, y, alpha, beta).unwrap();
            let rhs = hermite_derivative_eval(m, alpha * x + beta * y).unwrap();
            let scale = (1..=m).map(|k| {
                binom_f64(m, k) * raw_eval(m - k, x).abs() * (k as f64 * raw_eval(k - 1, y)).abs()
                    * alpha.abs().powi((m - k) as i32) * beta.abs().powi(k as i32 - 1)
            }).sum::<f64>().max(rhs.abs()).max(1.0);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * scale);
        }
    }
}
