//! Small numerical helpers shared across modules.

use libm::erfc;
use libm::lgamma as ln_gamma;
use std::f64::consts::{PI, SQRT_2};

/// `1/√(2π)`
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn normal_ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * (2.0 * PI).ln()
}

/// Standard normal CDF via `erfc`, accurate in both tails.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// `ln C(n, k)`
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    if k == 0 || k == n {
        return 0.0;
    }
    if n <= 60 {
        return (binomial_u128(n, k) as f64).ln();
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Exact binomial coefficient for small arguments.
pub fn binomial_u128(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}

/// `ln n!`
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// `ln(1+x) - x` without cancellation for small `|x|`.
pub fn ln1p_minus_x(x: f64) -> f64 {
    if x.abs() < 0.05 {
        // sum_{k>=2} (-1)^{k+1} x^k / k
        let mut pow = x * x;
        let mut sum = 0.0;
        let mut k = 2u32;
        loop {
            let term = if k % 2 == 0 { -pow } else { pow } / f64::from(k);
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break sum;
            }
            pow *= x;
            k += 1;
        }
    } else {
        x.ln_1p() - x
    }
}

/// `atanh(x) - x` without cancellation for small `|x|`.
pub fn atanh_minus_x(x: f64) -> f64 {
    if x.abs() < 0.05 {
        // x³/3 + x⁵/5 + ...
        let x2 = x * x;
        let mut pow = x * x2;
        let mut sum = 0.0f64;
        let mut k = 3.0;
        while pow.abs() / k > 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
            sum += pow / k;
            pow *= x2;
            k += 2.0;
        }
        sum
    } else {
        x.atanh() - x
    }
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_points() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(2.0) - 0.977_249_868_051_820_8).abs() < 1e-14);
        assert!((normal_cdf(-8.0) - 6.220_960_574_271_785e-16).abs() < 1e-28);
    }

    #[test]
    fn ln1p_minus_x_matches_direct_away_from_zero() {
        for &x in &[0.04, -0.04, 0.01, 1e-3, -1e-5] {
            let series = ln1p_minus_x(x);
            // high-order Taylor reference
            let reference: f64 = (2..40)
                .map(|k| (if k % 2 == 0 { -1.0 } else { 1.0 }) * x.powi(k) / k as f64)
                .sum();
            assert!((series - reference).abs() <= 1e-15 * reference.abs(), "{x}");
        }
        assert!((ln1p_minus_x(0.5) - (1.5f64.ln() - 0.5)).abs() < 1e-16);
    }

    #[test]
    fn atanh_minus_x_small() {
        let x = 0.01f64;
        let reference: f64 = (1..12).map(|k| x.powi(2 * k + 1) / (2 * k + 1) as f64).sum();
        assert!((atanh_minus_x(x) - reference).abs() <= 1e-15 * reference);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial_u128(10, 3), 120);
        assert!((ln_binomial(200, 100) - (ln_factorial(200) - 2.0 * ln_factorial(100))).abs() < 1e-9);
    }
}
