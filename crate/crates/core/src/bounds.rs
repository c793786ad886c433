//! Bounds on `χ²(S_n, 𝒩)`: the Hermite recurrence for `E H_m(S_n)`, the
//! single-step inequality, the unrolled recurrence and the final explicit
//! bounds built from the constant sequences `D_k` and `L_k`.

use once_cell::sync::Lazy;
use rayon::prelude::*;

use crate::constants::{analytic_upper, c_of_p, IndexSet, Method, LIMIT_BOUND_BASIC, LIMIT_BOUND_SYMMETRIC};
use crate::distances::HermiteProfile;
use crate::error::{Error, Result};
use crate::special::{ln_binomial, CompensatedSum};

/// Largest average χ² accepted by [`corollary_bound`].
pub const COROLLARY_THRESHOLD_BASIC: f64 = 0.82;
pub const COROLLARY_THRESHOLD_SYMMETRIC: f64 = 1.69;

/// Constants `D_j`/`L_j` up to this index are computed exactly in the
/// corollary product; later ones use the analytic upper bound.
const COROLLARY_EXACT_TERMS: u32 = 64;

/// Largest `n` for which falling factorials are exact integers.
pub const MAX_EXACT_FALLING: usize = 20;

/// Variances `σ_k²` of the weighted summands; they sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceProfile {
    sigma_sq: Vec<f64>,
}

impl VarianceProfile {
    pub fn new(sigma_sq: Vec<f64>) -> Result<Self> {
        if sigma_sq.len() < 2 {
            return Err(Error::precondition("need at least two summands"));
        }
        if sigma_sq.iter().any(|&s| !(s > 0.0 && s < 1.0)) {
            return Err(Error::precondition("each σ² must lie in (0, 1)"));
        }
        let total: f64 = sigma_sq.iter().copied().collect::<CompensatedSum>().value();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::precondition(format!("variances sum to {total}, not 1")));
        }
        Ok(VarianceProfile { sigma_sq })
    }

    /// `σ_k² = 1/n` for every `k`.
    pub fn equal(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn sigma_sq(&self) -> &[f64] {
        &self.sigma_sq
    }

    pub fn len(&self) -> usize {
        self.sigma_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma_sq.is_empty()
    }
}

/// `√B(m, j, p)` with `B(m,j,p) = C(m,j) p^j (1−p)^{m−j}`, in log space.
pub fn sqrt_binomial_weight(m: usize, j: usize, p: f64) -> f64 {
    let ln_b = ln_binomial(m as u64, j as u64) + j as f64 * p.ln() + (m - j) as f64 * (-p).ln_1p();
    (0.5 * ln_b).exp()
}

/// Right-hand side of the recurrence in normalized form:
///
/// `b_m = (1/m) Σ_k Σ_{j=1}^m b^{(n;k)}_{m−j} · j · a^{(k)}_j · √B(m, j, σ_k²)`
///
/// where `a^{(k)}` is the profile of `X_k` and `b^{(n;k)}` that of the
/// leave-one-out sum `S_{n;k}`.
pub fn stein_recurrence_rhs(
    profiles: &[HermiteProfile],
    variances: &VarianceProfile,
    leaveout_profiles: &[HermiteProfile],
    m: usize,
) -> Result<f64> {
    let n = variances.len();
    if profiles.len() != n || leaveout_profiles.len() != n {
        return Err(Error::precondition("one profile and one leave-out profile per summand"));
    }
    if m == 0 {
        return Err(Error::precondition("m must be at least 1"));
    }
    for (a, b) in profiles.iter().zip(leaveout_profiles) {
        if a.order < m || b.order + 1 < m {
            return Err(Error::capacity(format!(
                "profiles of order {}/{} cannot reach m = {m}",
                a.order, b.order
            )));
        }
    }
    let mut total = CompensatedSum::new();
    for k in 0..n {
        let p = variances.sigma_sq()[k];
        let a = &profiles[k].values;
        let b = &leaveout_profiles[k].values;
        for j in 1..=m {
            total.add(b[m - j] * j as f64 * a[j] * sqrt_binomial_weight(m, j, p));
        }
    }
    Ok(total.value() / m as f64)
}

/// `Σ_{j∉J} σ^{2(j−1)}` in closed form.
fn excluded_power_sum(set: IndexSet, sigma_sq: f64) -> f64 {
    match set {
        IndexSet::Basic => sigma_sq * sigma_sq / (1.0 - sigma_sq),
        IndexSet::Symmetric => sigma_sq.powi(3) / (1.0 - sigma_sq * sigma_sq),
    }
}

/// `Σ_k (Σ_{j∉J} σ_k^{2(j−1)}) χ²(X_k) + Σ_k σ_k² C_J(σ_k²) χ²(X_k) χ²(S_{n;k})`.
pub fn general_sigma_bound(
    chi2s: &[f64],
    variances: &VarianceProfile,
    leaveout_chi2s: &[f64],
    set: IndexSet,
) -> Result<f64> {
    let n = variances.len();
    if chi2s.len() != n || leaveout_chi2s.len() != n {
        return Err(Error::precondition("χ² lists must match the number of summands"));
    }
    check_nonnegative(chi2s)?;
    check_nonnegative(leaveout_chi2s)?;
    let mut total = CompensatedSum::new();
    for k in 0..n {
        let s2 = variances.sigma_sq()[k];
        total.add(excluded_power_sum(set, s2) * chi2s[k]);
        if chi2s[k] > 0.0 && leaveout_chi2s[k] > 0.0 {
            let c = c_of_p(set, s2, Method::ExactMax)?.value;
            total.add(s2 * c * chi2s[k] * leaveout_chi2s[k]);
        }
    }
    Ok(total.value())
}

fn check_nonnegative(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| *v >= 0.0 && v.is_finite()) {
        Ok(())
    } else {
        Err(Error::precondition("χ² values must be finite and nonnegative"))
    }
}

/// `M + Σ_{k=2}^n (C_n C_{n−1} ⋯ C_{n−k+2}) M^k` with `M` the mean of the
/// singleton values; `constants[i]` is `C_{i+2}`.
pub fn unroll_recurrence(singleton_values: &[f64], constants: &[f64]) -> Result<f64> {
    let n = singleton_values.len();
    if n < 2 {
        return Err(Error::precondition("need at least two singleton values"));
    }
    if constants.len() != n - 1 {
        return Err(Error::precondition(format!(
            "need constants C_2..C_{n} ({} values), got {}",
            n - 1,
            constants.len()
        )));
    }
    check_nonnegative(singleton_values)?;
    if constants.iter().any(|c| !(*c > 0.0)) {
        return Err(Error::precondition("constants must be positive"));
    }
    let m = singleton_values.iter().sum::<f64>() / n as f64;
    let mut total = CompensatedSum::new();
    total.add(m);
    let mut product = 1.0;
    let mut power = m;
    for k in 2..=n {
        product *= constants[n - k];
        power *= m;
        total.add(product * power);
    }
    Ok(total.value())
}

/// `n (n−1) ⋯ (n−k+1)`, exact for `n ≤ 20`.
pub fn falling_factorial(n: usize, k: usize) -> Result<u128> {
    if n > MAX_EXACT_FALLING {
        return Err(Error::capacity(format!("falling factorial needs n ≤ {MAX_EXACT_FALLING}")));
    }
    if k > n {
        return Ok(0);
    }
    Ok(((n - k + 1)..=n).map(|v| v as u128).product())
}

/// Sum over ordered tuples of distinct indices, divided by `n_(k)`.
pub fn symmetric_mean(values: &[f64], k: usize) -> Result<f64> {
    let n = values.len();
    if k == 0 || k > n {
        return Err(Error::precondition("need 1 ≤ k ≤ n"));
    }
    // elementary symmetric polynomials e_0..e_k
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for &v in values {
        for i in (1..=k).rev() {
            e[i] += e[i - 1] * v;
        }
    }
    // ordered tuples = k! e_k, and n_(k) = k! C(n,k)
    let k_fact: f64 = (1..=k).map(|v| v as f64).product();
    Ok(e[k] * k_fact / falling_factorial(n, k)? as f64)
}

/// Whether the `k`-th symmetric mean is at most `(mean)^k`.
pub fn maclaurin_check(values: &[f64], k: usize) -> Result<bool> {
    check_nonnegative(values)?;
    let lhs = symmetric_mean(values, k)?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok(lhs <= mean.powi(k as i32) + 1e-12)
}

/// `D_k`: `C_{1,2}(1/k)(k−1)/(k−2)` for `k ≥ 3`, `C_{1,2}(1/2)` for `k = 2`.
pub fn d_constant(k: u32) -> Result<f64> {
    if k < 2 {
        return Err(Error::precondition("D_k is defined for k ≥ 2"));
    }
    let c = c_of_p(IndexSet::Basic, 1.0 / k as f64, Method::ExactMax)?.value;
    Ok(if k == 2 { c } else { c * (k - 1) as f64 / (k - 2) as f64 })
}

/// `L_k`: `C_sym(1/k)(k²−1)/((k−1)²−1)` for `k ≥ 3`, `3 C_sym(1/2)` for `k = 2`.
pub fn l_constant(k: u32) -> Result<f64> {
    if k < 2 {
        return Err(Error::precondition("L_k is defined for k ≥ 2"));
    }
    let c = c_of_p(IndexSet::Symmetric, 1.0 / k as f64, Method::ExactMax)?.value;
    let kf = k as f64;
    Ok(if k == 2 {
        3.0 * c
    } else {
        c * (kf * kf - 1.0) / ((kf - 1.0) * (kf - 1.0) - 1.0)
    })
}

/// `[C_2, ..., C_n]` for the basic (`D`) or symmetric (`L`) sequence.
pub fn constant_sequence(n: u32, symmetric: bool) -> Result<Vec<f64>> {
    (2..=n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|k| if symmetric { l_constant(k) } else { d_constant(k) })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub chi2s: Vec<f64>,
    pub average: f64,
    pub symmetric: bool,
    /// `avg/(n−1)` or `avg/(n²−1)`.
    pub leading_term: f64,
    pub correction: f64,
    pub total: f64,
    pub oracle_chi2: Option<f64>,
    /// `D_2..D_n` or `L_2..L_n`.
    pub constants: Vec<f64>,
}

impl BoundReport {
    pub fn with_oracle(mut self, chi2: f64) -> Self {
        self.oracle_chi2 = Some(chi2);
        self
    }

    /// `None` without an oracle value, otherwise whether it is below the bound.
    pub fn is_sound(&self, slack: f64) -> Option<bool> {
        self.oracle_chi2.map(|c| c <= self.total + slack)
    }
}

/// `χ²(S_n) ≤ unroll(χ², C)/(n−1)` with `C = D`, or `/(n²−1)` with `C = L`
/// for symmetric summands.
pub fn theorem_bound(n: usize, chi2s: &[f64], symmetric: bool) -> Result<BoundReport> {
    if n < 2 {
        return Err(Error::precondition("n must be at least 2"));
    }
    if chi2s.len() != n {
        return Err(Error::precondition(format!("expected {n} χ² values, got {}", chi2s.len())));
    }
    check_nonnegative(chi2s)?;
    let n32 = u32::try_from(n).map_err(|_| Error::capacity("n too large"))?;
    let constants = constant_sequence(n32, symmetric)?;
    let nf = n as f64;
    let divisor = if symmetric { nf * nf - 1.0 } else { nf - 1.0 };
    let average = chi2s.iter().sum::<f64>() / nf;
    let total = unroll_recurrence(chi2s, &constants)? / divisor;
    let leading_term = average / divisor;
    Ok(BoundReport {
        n,
        chi2s: chi2s.to_vec(),
        average,
        symmetric,
        leading_term,
        correction: (total - leading_term).max(0.0),
        total,
        oracle_chi2: None,
        constants,
    })
}

/// Product factor and geometric form of the bound for an average χ² below
/// the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct CorollaryBound {
    pub n: usize,
    pub average: f64,
    pub symmetric: bool,
    /// Per-factor cap: `D_j ≤ cap·max(1, D_j/cap)`.
    pub cap: f64,
    pub threshold: f64,
    /// `cap · average`, the geometric ratio.
    pub ratio: f64,
    /// `Π_j max(1, D_j/cap)` over all `j ≥ 2`.
    pub product_factor: f64,
    /// Index past which every factor is provably below the cap.
    pub product_cutoff: u32,
    /// `C` in `χ² ≤ (avg + C avg²)/(n−1)` at this average.
    pub constant: f64,
    /// `C` evaluated at the threshold, valid for every admissible average.
    pub absolute_constant: f64,
    pub bound: f64,
}

struct ProductFactor {
    value: f64,
    cutoff: u32,
}

fn product_factor(symmetric: bool) -> Result<ProductFactor> {
    let (set, cap) = if symmetric {
        (IndexSet::Symmetric, LIMIT_BOUND_SYMMETRIC)
    } else {
        (IndexSet::Basic, LIMIT_BOUND_BASIC)
    };
    let boundary = |j: f64| {
        if symmetric {
            (j * j - 1.0) / ((j - 1.0) * (j - 1.0) - 1.0)
        } else {
            (j - 1.0) / (j - 2.0)
        }
    };
    let exact = constant_sequence(COROLLARY_EXACT_TERMS, symmetric)?;
    let mut ln_product: f64 = exact.iter().map(|d| (d / cap).max(1.0).ln()).sum();
    // analytic upper bounds decrease in j, so the first one below the cap
    // ends the product
    let mut j = COROLLARY_EXACT_TERMS + 1;
    loop {
        let jf = j as f64;
        let upper = analytic_upper(set, 1.0 / jf) * boundary(jf);
        if upper <= cap {
            break;
        }
        ln_product += (upper / cap).ln();
        j += 1;
        if j > 100_000_000 {
            return Err(Error::capacity("corollary product does not terminate"));
        }
    }
    Ok(ProductFactor {
        value: ln_product.exp(),
        cutoff: j,
    })
}

static PRODUCT_BASIC: Lazy<std::result::Result<(f64, u32), Error>> =
    Lazy::new(|| product_factor(false).map(|p| (p.value, p.cutoff)));
static PRODUCT_SYMMETRIC: Lazy<std::result::Result<(f64, u32), Error>> =
    Lazy::new(|| product_factor(true).map(|p| (p.value, p.cutoff)));

/// `χ² ≤ (avg + C avg²)/(n−1)` (or `/(n²−1)`) with the constant implied by
/// the computed `D`/`L` sequences; refuses above the threshold.
pub fn corollary_bound(n: usize, avg_chi2: f64, symmetric: bool) -> Result<CorollaryBound> {
    if n < 2 {
        return Err(Error::precondition("n must be at least 2"));
    }
    let (cap, threshold) = if symmetric {
        (LIMIT_BOUND_SYMMETRIC, COROLLARY_THRESHOLD_SYMMETRIC)
    } else {
        (LIMIT_BOUND_BASIC, COROLLARY_THRESHOLD_BASIC)
    };
    if !(avg_chi2 >= 0.0) {
        return Err(Error::precondition("average χ² must be nonnegative"));
    }
    if avg_chi2 > threshold {
        return Err(Error::precondition(format!(
            "average χ² {avg_chi2} exceeds the threshold {threshold}"
        )));
    }
    let (product, cutoff) = if symmetric { &*PRODUCT_SYMMETRIC } else { &*PRODUCT_BASIC }
        .clone()?;
    let constant = product * cap / (1.0 - cap * avg_chi2);
    let absolute_constant = product * cap / (1.0 - cap * threshold);
    let nf = n as f64;
    let divisor = if symmetric { nf * nf - 1.0 } else { nf - 1.0 };
    Ok(CorollaryBound {
        n,
        average: avg_chi2,
        symmetric,
        cap,
        threshold,
        ratio: cap * avg_chi2,
        product_factor: product,
        product_cutoff: cutoff,
        constant,
        absolute_constant,
        bound: (avg_chi2 + constant * avg_chi2 * avg_chi2) / divisor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{h_exact, IndexSet};
    use proptest::prelude::*;

    fn profile(values: Vec<f64>) -> HermiteProfile {
        HermiteProfile::from_values(values, 0.0).unwrap()
    }

    #[test]
    fn variance_profile_validation() {
        assert!(VarianceProfile::new(vec![0.5, 0.5]).is_ok());
        assert!(VarianceProfile::new(vec![0.5, 0.4]).is_err());
        assert!(VarianceProfile::new(vec![1.0, 0.0]).is_err());
        assert!(VarianceProfile::new(vec![1.0]).is_err());
        assert_eq!(VarianceProfile::equal(4).unwrap().len(), 4);
    }

    #[test]
    fn recurrence_vanishes_at_low_orders() {
        let a = profile(vec![1.0, 0.0, 0.0, 0.2, -0.1]);
        let v = VarianceProfile::equal(2).unwrap();
        for m in 1..=2 {
            let r = stein_recurrence_rhs(&[a.clone(), a.clone()], &v, &[a.clone(), a.clone()], m).unwrap();
            assert_eq!(r, 0.0);
        }
        assert!(matches!(
            stein_recurrence_rhs(&[a.clone(), a.clone()], &v, &[a.clone(), a.clone()], 6),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn recurrence_third_cumulant_scaling() {
        // E H_3(S_n) = n σ³ E H_3(X) for i.i.d. summands
        let a3 = 0.37;
        let a = profile(vec![1.0, 0.0, 0.0, a3]);
        let n = 3;
        let v = VarianceProfile::equal(n).unwrap();
        let b = profile(vec![1.0, 0.0, 0.0]);
        let rhs = stein_recurrence_rhs(&vec![a; n], &v, &vec![b; n], 3).unwrap();
        let expected = n as f64 * (1.0 / n as f64).powf(1.5) * a3;
        assert!((rhs - expected).abs() < 1e-14);
    }

    #[test]
    fn binomial_weights_sum_to_one() {
        let s: f64 = (0..=200).map(|j| sqrt_binomial_weight(200, j, 0.3).powi(2)).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn general_sigma_reduces_to_equal_variance_forms() {
        let n = 4;
        let v = VarianceProfile::equal(n).unwrap();
        let chi = [0.3, 0.2, 0.1, 0.25];
        let loo = [0.05, 0.04, 0.03, 0.02];
        let nf = n as f64;
        let sum: f64 = chi.iter().sum();
        let cross: f64 = chi.iter().zip(&loo).map(|(a, b)| a * b).sum();
        let c12 = c_of_p(IndexSet::Basic, 0.25, Method::ExactMax).unwrap().value;
        let basic = general_sigma_bound(&chi, &v, &loo, IndexSet::Basic).unwrap();
        assert!((basic - (sum / (nf * (nf - 1.0)) + c12 / nf * cross)).abs() < 1e-14);
        let cs = c_of_p(IndexSet::Symmetric, 0.25, Method::ExactMax).unwrap().value;
        let sym = general_sigma_bound(&chi, &v, &loo, IndexSet::Symmetric).unwrap();
        assert!((sym - (sum / (nf * (nf * nf - 1.0)) + cs / nf * cross)).abs() < 1e-14);
        assert_eq!(general_sigma_bound(&[0.0; 4], &v, &[0.0; 4], IndexSet::Basic).unwrap(), 0.0);
    }

    #[test]
    fn unroll_small_cases() {
        assert_eq!(unroll_recurrence(&[0.0, 0.0], &[3.0]).unwrap(), 0.0);
        let v = 0.3;
        let c = 1.7;
        assert!((unroll_recurrence(&[v, v], &[c]).unwrap() - (v + c * v * v)).abs() < 1e-15);
        assert!(unroll_recurrence(&[v, v, v], &[c]).is_err());
    }

    #[test]
    fn maclaurin_examples() {
        assert!(maclaurin_check(&[0.4; 5], 3).unwrap());
        assert!((symmetric_mean(&[0.4; 5], 3).unwrap() - 0.4f64.powi(3)).abs() < 1e-15);
        assert_eq!(symmetric_mean(&[1.0, 0.0, 0.0], 2).unwrap(), 0.0);
        assert!(maclaurin_check(&[1.0, 0.0, 0.0], 2).unwrap());
        assert_eq!(falling_factorial(5, 2).unwrap(), 20);
        assert!(matches!(falling_factorial(21, 2), Err(Error::Capacity(_))));
    }

    #[test]
    fn constant_sequences() {
        let d = constant_sequence(10, false).unwrap();
        let l = constant_sequence(10, true).unwrap();
        assert!((d[0] - 2.132_659_630_85).abs() < 1e-9);
        assert!((l[0] - 3.0 * 1.056_913_300_31).abs() < 1e-9);
        assert!(l[0] < 3.2);
        assert!(l[1..].iter().all(|&x| x > 0.0 && x < 2.18));
        assert!(d.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn theorem_bound_basics() {
        let r = theorem_bound(4, &[0.0; 4], false).unwrap();
        assert_eq!(r.total, 0.0);
        for n in 2..=8 {
            let r = theorem_bound(n, &vec![0.3285; n], true).unwrap();
            let nf = n as f64;
            assert!(r.total < 1.6 / (nf * nf - 1.0), "n={n}: {}", r.total);
            assert!(r.total >= r.leading_term);
        }
        assert!(theorem_bound(3, &[0.1, 0.1], false).is_err());
    }

    #[test]
    fn corollary_examples() {
        assert_eq!(corollary_bound(5, 0.0, false).unwrap().bound, 0.0);
        let at = corollary_bound(5, 0.82, false).unwrap();
        assert!(at.bound.is_finite() && at.ratio < 1.0);
        assert!(corollary_bound(5, 0.83, false).is_err());
        assert!(corollary_bound(5, 1.69, true).unwrap().bound.is_finite());
        assert!(corollary_bound(5, 1.70, true).is_err());
    }

    #[test]
    fn corollary_dominates_theorem_bound() {
        for &(n, avg, sym) in &[(3, 0.5, false), (8, 0.8, false), (6, 1.5, true), (20, 0.3, true)] {
            let c = corollary_bound(n, avg, sym).unwrap();
            let t = theorem_bound(n, &vec![avg; n], sym).unwrap();
            assert!(t.total <= c.bound * (1.0 + 1e-12), "n={n} avg={avg}");
        }
    }

    #[test]
    fn limiting_constants_match_h() {
        // D_k → C(1/k) as k grows; spot check one value against h directly
        let c = c_of_p(IndexSet::Basic, 0.25, Method::ExactMax).unwrap();
        let s = c.argmax_s.unwrap();
        assert_eq!(h_exact(IndexSet::Basic, s, 0.25).unwrap(), c.value);
    }

    fn subset_oracle(values: &[f64], constants: &[f64]) -> f64 {
        // μ(A) defined by equality in the hypothesis, over all subsets
        let n = values.len();
        let mut mu = vec![0.0; 1 << n];
        for mask in 1usize..(1 << n) {
            let members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let size = members.len();
            mu[mask] = if size == 1 {
                values[members[0]]
            } else {
                let c = constants[size - 2];
                let s1: f64 = members.iter().map(|&k| values[k]).sum();
                let s2: f64 = members.iter().map(|&k| values[k] * mu[mask & !(1 << k)]).sum();
                s1 / size as f64 + c / size as f64 * s2
            };
        }
        mu[(1 << n) - 1]
    }

    #[test]
    fn unroll_matches_subset_oracle_for_equal_values() {
        for n in 2..=6 {
            let constants: Vec<f64> = (2..=n).map(|k| 1.0 + 0.3 * k as f64).collect();
            let v = 0.41;
            let a = unroll_recurrence(&vec![v; n], &constants).unwrap();
            let b = subset_oracle(&vec![v; n], &constants);
            assert!((a - b).abs() <= 1e-12 * b.max(1.0), "n={n}");
        }
    }

    /// Mean over ordered `k`-tuples of distinct indices, by enumeration.
    fn tuple_oracle(values: &[f64], k: usize) -> f64 {
        fn walk(values: &[f64], k: usize, used: &mut Vec<bool>, prod: f64, acc: &mut (f64, usize)) {
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

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn maclaurin_fuzz(values in proptest::collection::vec(0.0f64..3.0, 1..=8), k_seed in 0usize..8) {
            let k = k_seed % values.len() + 1;
            let brute = tuple_oracle(&values, k);
            let fast = symmetric_mean(&values, k).unwrap();
            prop_assert!((brute - fast).abs() <= 1e-12 * brute.max(1.0));
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            prop_assert_eq!(maclaurin_check(&values, k).unwrap(), brute <= mean.powi(k as i32) + 1e-12);
            prop_assert!(maclaurin_check(&values, k).unwrap());
        }
    }

    proptest! {
        #[test]
        fn unroll_bounds_subset_oracle(values in proptest::collection::vec(0.0f64..2.0, 2..=6), seed in 0.5f64..3.0) {
            let n = values.len();
            let constants: Vec<f64> = (2..=n).map(|k| seed + 0.1 * k as f64).collect();
            let bound = unroll_recurrence(&values, &constants).unwrap();
            prop_assert!(subset_oracle(&values, &constants) <= bound * (1.0 + 1e-12));
        }

        #[test]
        fn theorem_bound_monotone(base in proptest::collection::vec(0.0f64..1.0, 4), idx in 0usize..4, bump in 0.0f64..0.5, sym in any::<bool>()) {
            let lo = theorem_bound(4, &base, sym).unwrap().total;
            let mut raised = base.clone();
            raised[idx] += bump;
            let hi = theorem_bound(4, &raised, sym).unwrap().total;
            prop_assert!(hi >= lo);
        }
    }
}
