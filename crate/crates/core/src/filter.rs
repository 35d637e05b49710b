//! Prefilter design.
//!
//! The raw central Grünwald–Letnikov kernel has frequency response
//! `|ω|^α · sinc(ωh/2)^α`. A short symmetric filter with response
//! `G̃(x) = g_0 + 2 Σ_{m=1}^{N_h} g_m cos(m x)` is chosen so that
//! `G̃(x) · sinc(x/2)^α = 1 + O(x^N)`, which lifts the stencil to order `N`.
//!
//! Matching Maclaurin coefficients gives a moment system
//! `Σ_m w_m (m²)^n = (-1)^n (2n)! β_n` (with `w_0 = g_0`, `w_m = 2 g_m`),
//! where `β_n` are the `x^{2n}` coefficients of `sinc(x/2)^{-α}`. Two
//! independent routes solve it:
//!
//! * production: `β` from a DFT of the sinc coefficients raised to `-α`,
//!   then the closed-form inverse of the symmetric integer Vandermonde
//!   matrix built by [`vandermonde_inverse_specialized`];
//! * oracle: `sinc^α` coefficients from the Miller recurrence, inverted as
//!   a power series, then a pivoted dense solve of the cosine-coefficient
//!   system.
//!
//! [`build_filter`] runs both and refuses to return a filter when they
//! disagree by more than [`PATH_DIVERGENCE_LIMIT`].

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::special::{dft_odd, idft_odd, DftPlan};

/// Relative disagreement between the two filter routes beyond which the
/// filter is rejected as numerically unstable.
pub const PATH_DIVERGENCE_LIMIT: f64 = 1e-6;

/// Tolerance on the DC normalisation `G̃(0) = 1`.
pub const DC_TOLERANCE: f64 = 1e-12;

/// Largest Vandermonde entry magnitude accepted by the specialized inverse.
pub const VANDERMONDE_OVERFLOW: f64 = 1e300;

/// Order parameters of a prefilter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    alpha: f64,
    order: usize,
    half_width: usize,
}

impl FilterSpec {
    /// `alpha` in `(0, 2]`, `order` an even integer `>= 2`.
    pub fn new(alpha: f64, order: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 2], got {alpha}")));
        }
        if order < 2 || !order.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "convergence order must be an even integer >= 2, got {order}"
            )));
        }
        Ok(Self { alpha, order, half_width: order.div_ceil(2) - 1 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Convergence order `N`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// One-sided filter width `N_h = ⌈N/2⌉ - 1`.
    pub fn half_width(&self) -> usize {
        self.half_width
    }
}

/// Maclaurin coefficients of `sinc(x/2)` in powers of `x²`:
/// `ǎ_n = (-1)^n / ((2n+1)! 4^n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SincSeries {
    coeffs: Vec<f64>,
}

impl SincSeries {
    /// The first `terms` coefficients (at least one).
    pub fn with_terms(terms: usize) -> Self {
        let mut coeffs = Vec::with_capacity(terms.max(1));
        coeffs.push(1.0);
        for n in 1..terms {
            let prev = coeffs[n - 1];
            let nf = n as f64;
            coeffs.push(-prev / (4.0 * (2.0 * nf) * (2.0 * nf + 1.0)));
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// Coefficients `ǎ_0 .. ǎ_{N_h}` for a filter spec.
pub fn sinc_maclaurin(spec: &FilterSpec) -> SincSeries {
    SincSeries::with_terms(spec.half_width() + 1)
}

/// Maclaurin coefficients (in powers of `x²`) of `sinc(x/2)^exponent`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    exponent: f64,
    coeffs: Vec<f64>,
}

impl PowerSeries {
    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

/// Radius of the circle in the `z = x²` plane on which the truncated sinc
/// polynomial is sampled.
///
/// Aliasing from index `n + L` scales like `(R/ρ)^L`, with `ρ` the nearest
/// zero of the truncated polynomial, while rounding in coefficient `n`
/// scales like `ε (ρ/R)^n`. The radius balances the two. `1 - z/24` has
/// its zero at 24; longer truncations have theirs within 5% of `4π²`.
fn sampling_radius(half_width: usize, len: usize) -> f64 {
    let nearest_zero = if half_width == 1 { 24.0 } else { 4.0 * PI * PI };
    0.9 * nearest_zero * f64::EPSILON.powf(1.0 / (len + half_width) as f64)
}

/// Transform length for a series with `half_width + 1` coefficients.
fn dft_length(half_width: usize) -> usize {
    16 * half_width + 17
}

/// Coefficients of `sinc(x/2)^exponent` by raising the DFT of the sinc
/// series to a real power (principal branch) and transforming back.
///
/// The series is evaluated on a circle of radius `R` (see
/// `sampling_radius`) with `L = 16 N_h + 17` points, and the result is
/// rescaled by `R^{-n}`. Sampling on the unit circle with `L = 2N_h + 1`
/// loses most digits of the higher coefficients.
pub fn fractional_power_series_dft(series: &SincSeries, exponent: f64) -> Result<PowerSeries> {
    let terms = series.len();
    let half_width = terms - 1;
    let plan = DftPlan::new(dft_length(half_width))?;
    let radius = sampling_radius(half_width, plan.len());

    let mut scale = 1.0;
    let scaled: Vec<f64> = series
        .coeffs()
        .iter()
        .map(|&c| {
            let v = c * scale;
            scale *= radius;
            v
        })
        .collect();

    let spectrum: Vec<_> = dft_odd(&scaled, plan)?.into_iter().map(|x| x.powf(exponent)).collect();
    let back = idft_odd(&spectrum, plan)?;

    let mut unscale = 1.0;
    let coeffs = back
        .into_iter()
        .take(terms)
        .map(|v| {
            let c = v / unscale;
            unscale *= radius;
            c
        })
        .collect();
    Ok(PowerSeries { exponent, coeffs })
}

/// Coefficients of `sinc(x/2)^exponent` from the J.C.P. Miller recurrence
/// `c_k = (1/k) Σ_{j=1}^{k} ((exponent + 1) j - k) ǎ_j c_{k-j}`, which follows
/// from `p · (p^α)' = α p' · p^α`.
pub fn fractional_power_series_miller(series: &SincSeries, exponent: f64) -> PowerSeries {
    PowerSeries { exponent, coeffs: miller_power(series.coeffs(), exponent, series.len()) }
}

/// Power `p(z)^exponent` of a series with `p_0 = 1`, to `terms` coefficients.
pub(crate) fn miller_power(p: &[f64], exponent: f64, terms: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(terms);
    if terms == 0 {
        return c;
    }
    c.push(1.0);
    for k in 1..terms {
        let kf = k as f64;
        let mut acc = 0.0;
        for j in 1..=k.min(p.len() - 1) {
            acc += ((exponent + 1.0) * j as f64 - kf) * p[j] * c[k - j];
        }
        c.push(acc / kf);
    }
    c
}

/// One defect-correction step for `q ≈ p^exponent`.
///
/// The exact power satisfies `p q' - exponent · p' q = 0`. The residual of
/// that identity is computed from `q` and the correction solves the same
/// triangular relation, which removes the last few ulps left by the DFT.
pub(crate) fn polish_power(p: &[f64], exponent: f64, q: &[f64]) -> Vec<f64> {
    let terms = q.len();
    let weight = |k: usize, j: usize| (k - j) as f64 - exponent * j as f64;
    let mut delta = vec![0.0; terms];
    if terms == 0 {
        return delta;
    }
    delta[0] = 1.0 - q[0];
    for k in 1..terms {
        let top = k.min(p.len() - 1);
        let residual: f64 = (0..=top).map(|j| weight(k, j) * p[j] * q[k - j]).sum();
        let carried: f64 = (1..=top).map(|j| weight(k, j) * p[j] * delta[k - j]).sum();
        delta[k] = -(residual + carried) / k as f64;
    }
    q.iter().zip(&delta).map(|(a, d)| a + d).collect()
}

/// Reciprocal of a series with leading coefficient one, by forward
/// substitution in the lower-triangular Toeplitz system `a * b = e_0`.
pub(crate) fn series_reciprocal(a: &[f64]) -> Vec<f64> {
    let mut b: Vec<f64> = Vec::with_capacity(a.len());
    for n in 0..a.len() {
        if n == 0 {
            b.push(1.0);
            continue;
        }
        let s: f64 = (1..=n).map(|j| a[j] * b[n - j]).sum();
        b.push(-s);
    }
    b
}

/// Product of two series truncated to `terms` coefficients.
pub(crate) fn series_product(a: &[f64], b: &[f64], terms: usize) -> Vec<f64> {
    (0..terms).map(|n| (0..=n).filter(|&j| j < a.len() && n - j < b.len()).map(|j| a[j] * b[n - j]).sum()).collect()
}

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    size: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(size: usize) -> Self {
        Self { size, data: vec![0.0; size * size] }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.size + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.size + col] = value;
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.size;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let s = (0..n).map(|k| self.get(i, k) * other.get(k, j)).sum();
                out.set(i, j, s);
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Inverse of the even-symmetric integer Vandermonde system, as produced by
/// the specialized recurrence.
///
/// Entry `(n, m)` equals `s_n · [W^{-1}]_{m,n}`, with `W_{n,m} = (m²)^n`,
/// `s_0 = 1`, `s_n = 2^{n-1} n!`, and an extra factor 2 in column `m = 0`
/// for `n >= 1`. With that convention the filter is
/// `g_m = Σ_n V_{n,m} e_n`, where `e_n = (-1)^n (2n-1)!! β_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledVandermondeInverse {
    entries: Matrix,
}

impl ScaledVandermondeInverse {
    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn size(&self) -> usize {
        self.entries.size()
    }

    /// `g_m = Σ_n V_{n,m} rhs_n`.
    pub fn apply(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.size();
        if rhs.len() != n {
            return Err(Error::LengthMismatch { expected: n, actual: rhs.len() });
        }
        Ok((0..n).map(|m| (0..n).map(|k| self.entries.get(k, m) * rhs[k]).sum()).collect())
    }
}

/// Inverse of the symmetric integer Vandermonde matrix on nodes
/// `-N_h..=N_h`, reduced to even powers and the right half, with each
/// step growing the node set by two.
pub fn vandermonde_inverse_specialized(half_width: usize) -> Result<ScaledVandermondeInverse> {
    let size = half_width + 1;
    let mut v = Matrix::zeros(size);
    v.set(0, 0, 1.0);
    for k in 1..size {
        let kf = k as f64;
        let denom = 2.0 * kf * (2.0 * kf - 1.0);
        let prev = v.clone();

        // new outermost basis polynomial, column k
        for n in 1..=k {
            let nf = n as f64;
            let mut val = (2.0 * nf * prev.get(n - 1, k - 1) + (kf - 1.0) * prev.get(n, k - 1)) / denom;
            if n < k {
                val -= kf * (kf - 1.0) / denom * prev.get(n, k - 1);
            }
            v.set(n, k, val);
        }
        // inner basis polynomials gain the factor (x² - k²)
        for m in 0..k {
            let mf = m as f64;
            let span = (kf - mf) * (kf + mf);
            v.set(k, m, -2.0 * kf / span * prev.get(k - 1, m));
            for n in 1..k {
                let nf = n as f64;
                v.set(n, m, (kf * kf * prev.get(n, m) - 2.0 * nf * prev.get(n - 1, m)) / span);
            }
        }
        if v.max_abs() > VANDERMONDE_OVERFLOW || !v.max_abs().is_finite() {
            return Err(Error::Instability(format!(
                "Vandermonde inverse entries overflow at step {k} of {half_width}"
            )));
        }
    }
    Ok(ScaledVandermondeInverse { entries: v })
}

/// Inverse of the Vandermonde matrix `V_{i,j} = x_i^j` on arbitrary distinct
/// nodes, by the Björck–Pereyra style recurrence that adds one node per
/// step. Column `j` of the result holds the monomial coefficients of the
/// Lagrange basis polynomial of node `x_j`.
pub fn vandermonde_inverse_bjorck(nodes: &[f64]) -> Result<Matrix> {
    for (i, &a) in nodes.iter().enumerate() {
        if !a.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite Vandermonde node {a}")));
        }
        if nodes[..i].contains(&a) {
            return Err(Error::DuplicateNode(a));
        }
    }
    let size = nodes.len();
    let mut v = Matrix::zeros(size);
    if size == 0 {
        return Ok(v);
    }
    v.set(0, 0, 1.0);
    for k in 1..size {
        let xk = nodes[k];
        let prev = v.clone();
        let num: f64 = nodes[..k - 1].iter().map(|&xn| nodes[k - 1] - xn).product();
        let den: f64 = nodes[..k].iter().map(|&xn| xk - xn).product();
        let factor = num / den;
        let xkm1 = nodes[k - 1];

        v.set(0, k, -factor * xkm1 * prev.get(0, k - 1));
        for i in 1..=k {
            v.set(i, k, factor * (prev.get(i - 1, k - 1) - xkm1 * prev.get(i, k - 1)));
        }
        for (j, &node) in nodes[..k].iter().enumerate() {
            let span = xk - node;
            v.set(0, j, xk / span * prev.get(0, j));
            for i in 1..=k {
                v.set(i, j, (xk * prev.get(i, j) - prev.get(i - 1, j)) / span);
            }
        }
    }
    Ok(v)
}

/// Cosine-series prefilter `g_0 .. g_{N_h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    spec: FilterSpec,
    coeffs: Vec<f64>,
}

impl Filter {
    /// Wraps externally computed coefficients. The length must be `N_h + 1`.
    pub fn from_coeffs(spec: FilterSpec, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != spec.half_width() + 1 {
            return Err(Error::LengthMismatch { expected: spec.half_width() + 1, actual: coeffs.len() });
        }
        Ok(Self { spec, coeffs })
    }

    pub fn spec(&self) -> &FilterSpec {
        &self.spec
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn alpha(&self) -> f64 {
        self.spec.alpha()
    }

    pub fn half_width(&self) -> usize {
        self.spec.half_width()
    }

    /// `G̃(0) = g_0 + 2 Σ g_m`.
    pub fn dc_gain(&self) -> f64 {
        self.coeffs[0] + 2.0 * self.coeffs[1..].iter().sum::<f64>()
    }

    /// `g_0 - 2 Σ_{m>=1} |g_m|`; positive means the filter is strictly
    /// diagonally dominant and hence positive definite.
    pub fn dominance_margin(&self) -> f64 {
        self.coeffs[0] - 2.0 * self.coeffs[1..].iter().map(|g| g.abs()).sum::<f64>()
    }

    pub fn is_diagonally_dominant(&self) -> bool {
        self.dominance_margin() > 0.0
    }
}

/// Rescales `β_n` (coefficients of `sinc(x/2)^{-α}`) into the right-hand side
/// expected by [`ScaledVandermondeInverse::apply`]: `e_n = (-1)^n (2n-1)!! β_n`.
fn vandermonde_rhs(beta: &[f64]) -> Vec<f64> {
    let mut sign_scale = 1.0;
    beta.iter()
        .enumerate()
        .map(|(n, &b)| {
            if n > 0 {
                sign_scale *= -(2.0 * n as f64 - 1.0);
            }
            sign_scale * b
        })
        .collect()
}

/// Production route: DFT fractional power (polished), rescale, specialized
/// inverse.
pub fn build_filter_fast(spec: &FilterSpec) -> Result<Vec<f64>> {
    let sinc = sinc_maclaurin(spec);
    let beta = fractional_power_series_dft(&sinc, -spec.alpha())?;
    let beta = polish_power(sinc.coeffs(), -spec.alpha(), beta.coeffs());
    let rhs = vandermonde_rhs(&beta);
    vandermonde_inverse_specialized(spec.half_width())?.apply(&rhs)
}

/// Oracle route: Miller recurrence, series reciprocal, and a pivoted dense
/// solve of the cosine Maclaurin system.
pub fn build_filter_direct(spec: &FilterSpec) -> Result<Vec<f64>> {
    let size = spec.half_width() + 1;
    let sinc = sinc_maclaurin(spec);
    let power = fractional_power_series_miller(&sinc, spec.alpha());
    let rhs = series_reciprocal(power.coeffs());

    // row n: x^{2n} coefficient of g_0 + 2 Σ g_m cos(m x)
    let mut a = vec![vec![0.0; size]; size];
    let mut fact = 1.0;
    for (n, row) in a.iter_mut().enumerate() {
        if n > 0 {
            fact *= (2 * n - 1) as f64 * (2 * n) as f64;
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        for (m, entry) in row.iter_mut().enumerate() {
            let c = if n == 0 { 1.0 } else { sign * (m as f64).powi(2 * n as i32) / fact };
            *entry = if m == 0 { c } else { 2.0 * c };
        }
    }
    solve_dense(a, rhs)
}

/// Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap_or(col);
        if a[pivot][col] == 0.0 {
            return Err(Error::Instability("singular cosine coefficient matrix".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            let (upper, lower) = a.split_at_mut(row);
            for (x, p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Ok(x)
}

/// Largest entrywise relative difference between two coefficient vectors.
pub fn max_relative_difference(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let scale = x.abs().max(y.abs());
            if scale == 0.0 {
                0.0
            } else {
                (x - y).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

/// Builds the order-`N` prefilter and cross-checks it against the oracle
/// route.
pub fn build_filter(spec: FilterSpec) -> Result<Filter> {
    let coeffs = build_filter_fast(&spec)?;
    let oracle = build_filter_direct(&spec)?;
    let divergence = max_relative_difference(&coeffs, &oracle);
    if divergence.is_nan() || divergence > PATH_DIVERGENCE_LIMIT {
        return Err(Error::Instability(format!(
            "filter routes disagree by {divergence:e} at order {} (alpha = {})",
            spec.order(),
            spec.alpha()
        )));
    }
    let filter = Filter { spec, coeffs };
    let dc = filter.dc_gain();
    let deviation = (dc - 1.0).abs();
    if deviation.is_nan() || deviation > DC_TOLERANCE {
        return Err(Error::Instability(format!("filter DC gain {dc} deviates from 1")));
    }
    Ok(filter)
}
