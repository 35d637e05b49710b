//! Closed-form Riesz derivatives of the two test families, and a quadrature
//! oracle for the left Riemann–Liouville derivative.
//!
//! Both families are symmetric about `x = 1/2`, so the right derivative at
//! `x` is the left one at `1 - x` and the Riesz derivative is
//! `C_α (L(x) + L(1 - x))` with `C_α = -1 / (2 cos(πα/2))`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::{compensated_sum, gamma, hyp1f2_regularized, recip_gamma, scaled_upper_gamma_cf};

/// Above this value of `2πf x` the cosine left derivative switches from the
/// ₁F̃₂ series to the incomplete-Gamma form.
const COSINE_SERIES_LIMIT: f64 = 8.0;

/// Riesz normalisation `C_α = -1 / (2 cos(πα/2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RieszConstant(f64);

impl RieszConstant {
    pub fn new(alpha: f64) -> Result<Self> {
        let c = (0.5 * PI * alpha).cos();
        if alpha == 1.0 || c.abs() < 1e-14 {
            return Err(Error::SingularConstant(alpha));
        }
        Ok(Self(-0.5 / c))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

fn check_alpha(alpha: f64) -> Result<RieszConstant> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidParameter(format!("reference solutions need alpha in (0, 2), got {alpha}")));
    }
    RieszConstant::new(alpha)
}

fn check_x(x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("reference solutions are evaluated on (0, 1), got x = {x}")));
    }
    Ok(())
}

/// `u(x) = x^q (1 - x)^q` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolynomialCase {
    q: u32,
    alpha: f64,
    constant: RieszConstant,
}

impl PolynomialCase {
    pub fn new(q: u32, alpha: f64) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidParameter(format!("smoothness exponent q must be >= 2, got {q}")));
        }
        let constant = check_alpha(alpha)?;
        Ok(Self { q, alpha, constant })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Monomial coefficients `(-1)^n binom(q, n)` of `x^{q+n}`.
    fn coefficients(&self) -> Vec<f64> {
        let q = self.q as usize;
        let mut c = Vec::with_capacity(q + 1);
        let mut binom = 1.0;
        for n in 0..=q {
            if n > 0 {
                binom = binom * (q + 1 - n) as f64 / n as f64;
            }
            c.push(if n % 2 == 0 { binom } else { -binom });
        }
        c
    }

    pub fn value(&self, x: f64) -> f64 {
        let q = self.q as i32;
        (x * (1.0 - x)).powi(q)
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let q = self.q as f64;
        compensated_sum(self.coefficients().iter().enumerate().map(|(n, c)| {
            let p = q + n as f64;
            c * p * (p - 1.0) * x.powf(p - 2.0)
        }))
    }

    /// Left Riemann–Liouville derivative `₀D_x^α u`.
    pub fn left_derivative(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        Ok(self.left_unchecked(x))
    }

    fn left_unchecked(&self, x: f64) -> f64 {
        let q = self.q as usize;
        let alpha = self.alpha;
        // Γ(q+1)/Γ(q+1-α) built up from 1/Γ(1-α), then stepped in n
        let mut ratio = recip_gamma(1.0 - alpha).expect("alpha != 1");
        for k in 1..=q {
            ratio *= k as f64 / (k as f64 - alpha);
        }
        let mut terms = Vec::with_capacity(q + 1);
        for (n, c) in self.coefficients().into_iter().enumerate() {
            if n > 0 {
                let p = (q + n) as f64;
                ratio *= p / (p - alpha);
            }
            terms.push(c * ratio * x.powf((q + n) as f64 - alpha));
        }
        compensated_sum(terms)
    }
}

/// Riesz derivative of `x^q (1 - x)^q`.
pub fn poly_riesz_exact(case: &PolynomialCase, x: f64) -> Result<f64> {
    check_x(x)?;
    Ok(case.constant.value() * (case.left_unchecked(x) + case.left_unchecked(1.0 - x)))
}

/// `u(x) = cos(2π f x)` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineCase {
    cycles: u32,
    alpha: f64,
    constant: RieszConstant,
}

impl CosineCase {
    pub fn new(cycles: u32, alpha: f64) -> Result<Self> {
        if cycles < 1 {
            return Err(Error::InvalidParameter("cosine frequency must be at least 1".into()));
        }
        let constant = check_alpha(alpha)?;
        Ok(Self { cycles, alpha, constant })
    }

    pub fn cycles(&self) -> u32 {
        self.cycles
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn omega(&self) -> f64 {
        2.0 * PI * self.cycles as f64
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.omega() * x).cos()
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let w = self.omega();
        -w * w * (w * x).cos()
    }

    /// Left Riemann–Liouville derivative `₀D_x^α cos(2πf x)`.
    pub fn left_derivative(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        self.left_unchecked(x)
    }

    fn left_unchecked(&self, x: f64) -> Result<f64> {
        let alpha = self.alpha;
        let w = self.omega();
        if w * x <= COSINE_SERIES_LIMIT {
            let p = 0.5 * w * x;
            let z = -p * p;
            let t1 =
                (alpha - 2.0) * (alpha - 1.0) * hyp1f2_regularized(1.0, 0.5 * (3.0 - alpha), 0.5 * (4.0 - alpha), z)?;
            let t2 =
                4.0 * p * p * (alpha - 2.5) * hyp1f2_regularized(2.0, 0.5 * (5.0 - alpha), 0.5 * (6.0 - alpha), z)?;
            let t3 = 8.0 * p.powi(4) * hyp1f2_regularized(3.0, 0.5 * (7.0 - alpha), 0.5 * (8.0 - alpha), z)?;
            return Ok(x.powf(-alpha) * PI.sqrt() / 2f64.powf(2.0 - alpha) * (t1 + t2 + t3));
        }
        // (iω)^α e^{iωx} (1 - Γ(-α, iωx)/Γ(-α)), real part
        let cf = scaled_upper_gamma_cf(-alpha, Complex64::new(0.0, w * x))?;
        let recip_gamma_neg = (-alpha) * (1.0 - alpha) / gamma(2.0 - alpha)?;
        Ok(w.powf(alpha) * (w * x + 0.5 * PI * alpha).cos() - x.powf(-alpha) * cf.re * recip_gamma_neg)
    }
}

/// Riesz derivative of `cos(2π f x)` restricted to `[0, 1]`.
pub fn cosine_riesz_exact(case: &CosineCase, x: f64) -> Result<f64> {
    check_x(x)?;
    Ok(case.constant.value() * (case.left_unchecked(x)? + case.left_unchecked(1.0 - x)?))
}

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_64, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

const QUAD_MAX_INTERVALS: usize = 20_000;

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss–Kronrod: the piece with the largest error
/// estimate is bisected until the summed estimate meets `tol`.
fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let piece = |a: f64, b: f64| {
        let (value, err) = gk15(f, a, b);
        Piece { a, b, value, err }
    };
    let mut heap = std::collections::BinaryHeap::new();
    heap.push(piece(a, b));
    loop {
        let total: f64 = heap.iter().map(|p| p.err).sum();
        if total <= tol {
            return Ok(compensated_sum(heap.iter().map(|p| p.value)));
        }
        if heap.len() >= QUAD_MAX_INTERVALS {
            return Err(Error::NonConvergence { what: "adaptive quadrature", iterations: heap.len() });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        heap.push(piece(worst.a, mid));
        heap.push(piece(mid, worst.b));
    }
}

/// Absolute tolerance of [`rl_quadrature_oracle`].
pub const ORACLE_TOLERANCE: f64 = 1e-9;

/// Left Riemann–Liouville derivative of order `α ∈ (0, 2)` by quadrature:
///
/// `u(0) x^{-α}/Γ(1-α) + u'(0) x^{1-α}/Γ(2-α) + (1/Γ(2-α)) ∫_0^x (x-ξ)^{1-α} u''(ξ) dξ`.
///
/// The weakly singular integral is mapped by `t = (x-ξ)^{2-α}` onto
/// `(1/(2-α)) ∫_0^{x^{2-α}} u''(x - t^{1/(2-α)}) dt` and integrated with
/// globally adaptive Gauss–Kronrod 7/15.
pub fn rl_quadrature_oracle<F: Fn(f64) -> f64>(u0: f64, du0: f64, d2u: F, alpha: f64, x: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) || alpha == 1.0 {
        return Err(Error::InvalidParameter(format!("oracle needs alpha in (0, 1) or (1, 2), got {alpha}")));
    }
    if x.is_nan() || x <= 0.0 {
        return Err(Error::Domain(format!("oracle needs x > 0, got {x}")));
    }
    let g2 = gamma(2.0 - alpha)?;
    let beta = 2.0 - alpha;
    let upper = x.powf(beta);
    let integrand = |t: f64| d2u(x - t.powf(1.0 / beta));
    let integral = adaptive(&integrand, 0.0, upper, ORACLE_TOLERANCE * beta * g2)? / beta;
    // 1/Γ(1-α) = (1-α)/Γ(2-α), also for α > 1
    Ok(u0 * x.powf(-alpha) * (1.0 - alpha) / g2 + du0 * x.powf(1.0 - alpha) / g2 + integral / g2)
}
