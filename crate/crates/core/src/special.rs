//! Scalar special functions and the small transforms the filter builder needs.
//!
//! Everything here works in `f64`. The Gamma function comes from `libm`
//! (musl's `tgamma`); the regularized ₁F̃₂ is summed
//! by forward term recurrence with Neumaier compensation; the odd-length DFT
//! is a direct O(L²) sum, since the transforms involved are at most a few
//! dozen points long.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex sample of a transform.
pub type ComplexValue = Complex64;

/// Gamma function for positive real arguments.
pub fn gamma(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("gamma requires a finite x > 0, got {x}")));
    }
    Ok(libm::tgamma(x))
}

/// Reciprocal Gamma for any real argument that is not a nonpositive integer.
///
/// Negative arguments are shifted up with `1/Γ(x) = x/Γ(x+1)`.
pub fn recip_gamma(x: f64) -> Result<f64> {
    if x <= 0.0 && x == x.floor() {
        return Err(Error::Domain(format!("1/gamma has a zero at nonpositive integer {x}")));
    }
    let mut shift = 1.0;
    let mut y = x;
    while y <= 0.0 {
        shift *= y;
        y += 1.0;
    }
    Ok(shift / gamma(y)?)
}

/// Neumaier (improved Kahan–Babuška) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.carry += (self.sum - t) + value;
        } else {
            self.carry += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of an iterator of `f64`.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// Default term budget for [`hyp1f2_regularized`].
pub const HYP1F2_MAX_TERMS: usize = 500;

/// Regularized generalized hypergeometric function
/// `₁F̃₂(a; b1, b2; z) = Σ (a)_k z^k / (Γ(b1+k) Γ(b2+k) k!)`.
///
/// The series is alternating for negative `z` and its terms peak near
/// `k ≈ |z|^{1/3}`; the peak magnitude bounds the attainable absolute
/// accuracy, roughly `ε·max|t_k|`.
pub fn hyp1f2_regularized(a: f64, b1: f64, b2: f64, z: f64) -> Result<f64> {
    hyp1f2_regularized_with_cap(a, b1, b2, z, HYP1F2_MAX_TERMS)
}

/// [`hyp1f2_regularized`] with an explicit cap on the number of terms.
pub fn hyp1f2_regularized_with_cap(a: f64, b1: f64, b2: f64, z: f64, max_terms: usize) -> Result<f64> {
    let mut term = recip_gamma(b1)? * recip_gamma(b2)?;
    if z == 0.0 || term == 0.0 {
        return Ok(term);
    }
    let mut acc = CompensatedSum::new();
    acc.add(term);
    let mut past_peak = false;
    for k in 0..max_terms {
        let kf = k as f64;
        let ratio = (a + kf) * z / ((b1 + kf) * (b2 + kf) * (kf + 1.0));
        term *= ratio;
        acc.add(term);
        if ratio.abs() < 1.0 {
            past_peak = true;
        }
        if term == 0.0 || (past_peak && term.abs() <= f64::EPSILON * acc.value().abs()) {
            return Ok(acc.value());
        }
    }
    Err(Error::NonConvergence { what: "hyp1f2 series", iterations: max_terms })
}

/// Continued fraction `e^z z^{-a} Γ(a, z)` for the upper incomplete Gamma
/// function, evaluated with the modified Lentz method.
///
/// Converges for `|z|` of order one and larger away from the negative real
/// axis; `a` may be negative and non-integer.
pub fn scaled_upper_gamma_cf(a: f64, z: Complex64) -> Result<Complex64> {
    const TINY: f64 = 1e-300;
    const MAX_ITER: usize = 5_000;
    let tiny = Complex64::new(TINY, 0.0);
    let mut b = z + (1.0 - a);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = if b.norm() == 0.0 { tiny } else { b }.inv();
    let mut h = d;
    for n in 1..MAX_ITER {
        let nf = n as f64;
        let an = -nf * (nf - a);
        b += 2.0;
        d = b + d * an;
        if d.norm() == 0.0 {
            d = tiny;
        }
        c = b + c.inv() * an;
        if c.norm() == 0.0 {
            c = tiny;
        }
        d = d.inv();
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            return Ok(h);
        }
    }
    Err(Error::NonConvergence { what: "incomplete gamma continued fraction", iterations: MAX_ITER })
}

/// Fixed transform length for [`dft_odd`] / [`idft_odd`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DftPlan {
    len: usize,
}

impl DftPlan {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 || len.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("DFT length must be odd and positive, got {len}")));
        }
        Ok(Self { len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `e^{sign·i·2π·(mn mod L)/L}`; reducing the index first keeps the
    /// angle small and the twiddles exact to rounding.
    fn twiddle(&self, m: usize, n: usize, sign: f64) -> Complex64 {
        let k = (m * n) % self.len;
        let theta = sign * 2.0 * PI * k as f64 / self.len as f64;
        Complex64::new(theta.cos(), theta.sin())
    }
}

/// Forward DFT `X_m = Σ_n c_n e^{-iω_m n}`, `ω_m = 2πm/L`, of a zero-padded
/// real sequence.
pub fn dft_odd(coeffs: &[f64], plan: DftPlan) -> Result<Vec<ComplexValue>> {
    let len = plan.len();
    if coeffs.len() > len {
        return Err(Error::LengthMismatch { expected: len, actual: coeffs.len() });
    }
    Ok((0..len).map(|m| coeffs.iter().enumerate().map(|(n, &c)| plan.twiddle(m, n, -1.0) * c).sum()).collect())
}

/// Inverse DFT `b_n = (1/L) Σ_m X_m e^{+iω_m n}` of a spectrum that is
/// conjugate-symmetric up to rounding. The imaginary parts are checked
/// against `1e-12 · max|b|` and then dropped.
pub fn idft_odd(spectrum: &[ComplexValue], plan: DftPlan) -> Result<Vec<f64>> {
    let len = plan.len();
    if spectrum.len() != len {
        return Err(Error::LengthMismatch { expected: len, actual: spectrum.len() });
    }
    let scale = 1.0 / len as f64;
    let full: Vec<Complex64> = (0..len)
        .map(|n| spectrum.iter().enumerate().map(|(m, &x)| x * plan.twiddle(m, n, 1.0)).sum::<Complex64>() * scale)
        .collect();
    let max_mag = full.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let residue = full.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    let threshold = 1e-12 * max_mag;
    if residue > threshold {
        return Err(Error::SymmetryViolation { residue, threshold });
    }
    Ok(full.into_iter().map(|v| v.re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn gamma_integers() {
        assert_eq!(gamma(1.0).unwrap(), 1.0);
        assert!(rel(gamma(3.0).unwrap(), 2.0) < 1e-15);
        assert!(rel(gamma(6.0).unwrap(), 120.0) < 1e-14);
    }

    #[test]
    fn gamma_against_high_precision() {
        // 40-digit reference values
        assert!(rel(gamma(2.9).unwrap(), 1.827_355_080_624_036_1) < 1e-14);
        assert!(rel(gamma(0.3).unwrap(), 2.991_568_987_687_590_6) < 1e-14);
        assert!(rel(gamma(17.25).unwrap(), 42_249_866_656_927.04) < 1e-13);
        assert!(rel(gamma(0.5).unwrap(), PI.sqrt()) < 1e-15);
    }

    #[test]
    fn gamma_recurrence() {
        let mut x = 0.1;
        while x <= 30.0 {
            let lhs = gamma(x + 1.0).unwrap();
            let rhs = x * gamma(x).unwrap();
            assert!(rel(lhs, rhs) < 1e-13, "x = {x}");
            x += 0.07;
        }
    }

    #[test]
    fn gamma_rejects_nonpositive() {
        assert!(matches!(gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(gamma(-1.5), Err(Error::Domain(_))));
        assert!(gamma(f64::NAN).is_err());
    }

    #[test]
    fn recip_gamma_negative_arguments() {
        // Γ(-0.5) = -2√π
        assert!(rel(recip_gamma(-0.5).unwrap(), -0.5 / PI.sqrt()) < 1e-14);
        assert!(recip_gamma(-2.0).is_err());
        assert!(rel(recip_gamma(4.0).unwrap(), 1.0 / 6.0) < 1e-15);
    }

    #[test]
    fn compensated_sum_residual() {
        let mut acc = CompensatedSum::new();
        for _ in 0..1_000_000 {
            acc.add(0.1);
        }
        acc.add(-100_000.0);
        assert!(acc.value().abs() < 1e-9, "residual {}", acc.value());
        let naive: f64 = std::iter::repeat_n(0.1, 1_000_000).sum::<f64>() - 100_000.0;
        assert!(naive.abs() > acc.value().abs());
    }

    #[test]
    fn hyp1f2_at_zero_is_the_seed() {
        assert_eq!(hyp1f2_regularized(1.0, 1.0, 1.0, 0.0).unwrap(), 1.0);
        let seed = 1.0 / (gamma(0.85).unwrap() * gamma(1.35).unwrap());
        let v = hyp1f2_regularized(1.0, 0.85, 1.35, 0.0).unwrap();
        assert!(rel(v, seed) < 1e-14);
        assert!(rel(v, 1.008_683_263_582_344_6) < 1e-14);
    }

    #[test]
    fn hyp1f2_against_high_precision_series() {
        // mpmath hyp1f2 / (Γ(b1)Γ(b2)) at 40 digits
        let cases =
            [(1.0, 0.85, 1.35, -10.0, 0.118_615_389_920_308_73), (2.0, 1.9, 2.4, -30.0, -0.009_029_087_654_955_256)];
        for (a, b1, b2, z, expected) in cases {
            let v = hyp1f2_regularized(a, b1, b2, z).unwrap();
            assert!(rel(v, expected) < 1e-9, "z={z}: {v} vs {expected}");
        }
        // the largest term here is ~1e6, so about six digits cancel
        let v = hyp1f2_regularized(1.0, 0.85, 1.35, -100.0).unwrap();
        assert!(rel(v, 0.111_899_174_422_846_04) < 1e-8, "{v}");
    }

    #[test]
    fn hyp1f2_term_cap() {
        let err = hyp1f2_regularized_with_cap(1.0, 0.85, 1.35, -2000.0, 5).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }

    #[test]
    fn upper_gamma_cf_matches_exponential_integral() {
        // a = 0: e^z Γ(0, z) = e^z E1(z); E1(5) = 0.001148295591275325...
        let v = scaled_upper_gamma_cf(0.0, Complex64::new(5.0, 0.0)).unwrap();
        let e1 = 0.001_148_295_591_275_325_8;
        assert!(rel(v.re, e1 * 5f64.exp()) < 1e-13);
        assert!(v.im.abs() < 1e-16);
        // a = 1: Γ(1, z) = e^{-z}, so the scaled value is 1/z
        let z = Complex64::new(0.0, 7.0);
        let v = scaled_upper_gamma_cf(1.0, z).unwrap();
        assert!((v - z.inv()).norm() < 1e-15);
    }

    #[test]
    fn dft_plan_requires_odd_length() {
        assert!(DftPlan::new(0).is_err());
        assert!(DftPlan::new(4).is_err());
        assert_eq!(DftPlan::new(9).unwrap().len(), 9);
    }

    #[test]
    fn dft_trivial_cases() {
        let one = dft_odd(&[1.0], DftPlan::new(1).unwrap()).unwrap();
        assert_eq!(one, vec![Complex64::new(1.0, 0.0)]);
        let delta = dft_odd(&[1.0, 0.0, 0.0], DftPlan::new(3).unwrap()).unwrap();
        for x in delta {
            assert_eq!(x, Complex64::new(1.0, 0.0));
        }
        let back = idft_odd(&[Complex64::new(1.0, 0.0); 3], DftPlan::new(3).unwrap()).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-15);
        assert!(back[1].abs() < 1e-15 && back[2].abs() < 1e-15);
    }

    #[test]
    fn dft_matches_brute_force() {
        let plan = DftPlan::new(5).unwrap();
        let c = [1.0, -1.0 / 24.0];
        let x = dft_odd(&c, plan).unwrap();
        for (m, xm) in x.iter().enumerate() {
            // independent route: cos/sin of the unreduced angle
            let w = 2.0 * PI * m as f64 / 5.0;
            let re = 1.0 - (1.0 / 24.0) * w.cos();
            let im = (1.0 / 24.0) * w.sin();
            assert!((xm.re - re).abs() < 1e-15 && (xm.im - im).abs() < 1e-15);
        }
    }

    #[test]
    fn dft_rejects_overlong_input() {
        assert!(dft_odd(&[1.0, 2.0, 3.0, 4.0], DftPlan::new(3).unwrap()).is_err());
    }

    #[test]
    fn idft_flags_asymmetric_spectrum() {
        let spec = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0)];
        assert!(matches!(idft_odd(&spec, DftPlan::new(3).unwrap()), Err(Error::SymmetryViolation { .. })));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn round_trip_is_identity(c in proptest::collection::vec(-10.0f64..10.0, 1..=26), half in 0usize..=25) {
                let len = 2 * (c.len() - 1).max(half) + 1;
                let plan = DftPlan::new(len).unwrap();
                let back = idft_odd(&dft_odd(&c, plan).unwrap(), plan).unwrap();
                let scale = c.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                for (n, v) in back.iter().enumerate() {
                    let orig = c.get(n).copied().unwrap_or(0.0);
                    prop_assert!((v - orig).abs() <= 1e-13 * scale);
                }
            }
        }
    }
}
