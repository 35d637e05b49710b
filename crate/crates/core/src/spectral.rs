//! Frequency-domain diagnostics of the filtered operator.
//!
//! `F(x) = |sinc(x/2)|^α · G̃(x)` is the response of the discrete operator
//! divided by the exact `|ω|^α`, and `r(x) = log₂[(1 - F(x)) / (1 - F(x/2))]`
//! is its local convergence rate. Near `x = 0` the difference `1 - F` is
//! summed from the Maclaurin series of the product, whose coefficients up to
//! `x^{N-2}` are zero by construction.

use std::f64::consts::PI;
use std::io::Write;

use crate::csv::{sig17, write_table};
use crate::error::{Error, Result};
use crate::filter::{miller_power, series_product, Filter, SincSeries};
use crate::stencil::Stencil;

/// Below this `x` the series form of `1 - F` is used.
const SERIES_CUTOFF: f64 = 2.0;

/// Extra series terms beyond the first nonzero one; the sinc power
/// converges like `(x² / 4π²)^n`, below `0.1^n` for `x <= 2`.
const SERIES_EXTRA_TERMS: usize = 40;

/// Default number of curve samples on `(0, π]`.
pub const DEFAULT_CURVE_POINTS: usize = 512;

pub const POWER_ITERATION_TOL: f64 = 1e-8;
pub const POWER_ITERATION_MAX: usize = 10_000;

/// Largest grid accepted by the dense eigenvalue probes.
pub const EIGEN_MAX_NODES: usize = 2000;

/// `G̃(x) = g_0 + 2 Σ g_m cos(m x)`.
pub fn filter_response(filter: &Filter, x: f64) -> f64 {
    let g = filter.coeffs();
    g[0] + 2.0 * g[1..].iter().enumerate().map(|(i, gm)| gm * ((i + 1) as f64 * x).cos()).sum::<f64>()
}

fn sinc_half(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (0.5 * x).sin() / (0.5 * x)
    }
}

/// `F(x) = |sinc(x/2)|^α · G̃(x)`.
pub fn relative_response(filter: &Filter, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    sinc_half(x).abs().powf(filter.alpha()) * filter_response(filter, x)
}

/// Maclaurin coefficients of `F` in `z = x²`, with the cancelled ones set
/// to exactly zero.
fn response_series(filter: &Filter) -> Vec<f64> {
    let half = filter.half_width();
    let terms = half + 1 + SERIES_EXTRA_TERMS;
    let g = filter.coeffs();

    let mut cosine = Vec::with_capacity(terms);
    let mut fact = 1.0;
    for n in 0..terms {
        if n > 0 {
            fact *= ((2 * n - 1) * 2 * n) as f64;
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let mut c = 2.0 * (1..g.len()).map(|m| g[m] * (m as f64).powi(2 * n as i32)).sum::<f64>();
        if n == 0 {
            c += g[0];
        }
        cosine.push(sign * c / fact);
    }
    let sinc = SincSeries::with_terms(terms);
    let power = miller_power(sinc.coeffs(), filter.alpha(), terms);
    let mut f = series_product(&cosine, &power, terms);
    f[0] = 1.0;
    for c in &mut f[1..=half] {
        *c = 0.0;
    }
    f
}

fn one_minus_response_series(series: &[f64], x: f64) -> f64 {
    let z = x * x;
    let first = series.iter().skip(1).position(|&c| c != 0.0).map_or(series.len(), |p| p + 1);
    let mut acc = 0.0;
    for &c in series[first..].iter().rev() {
        acc = acc * z + c;
    }
    -acc * z.powi(first as i32)
}

/// `1 - F(x)`, summed from the series for small `x`.
pub fn one_minus_response(filter: &Filter, x: f64) -> f64 {
    if x.abs() <= SERIES_CUTOFF {
        one_minus_response_series(&response_series(filter), x)
    } else {
        1.0 - relative_response(filter, x)
    }
}

/// Spectral convergence rate `log₂[(1 - F(x)) / (1 - F(x/2))]`.
pub fn spectral_rate(filter: &Filter, x: f64) -> Result<f64> {
    if !(x > 0.0 && x <= PI) {
        return Err(Error::InvalidParameter(format!("rate is defined on (0, pi], got x = {x}")));
    }
    let series = (x <= SERIES_CUTOFF).then(|| response_series(filter));
    rate_with(filter, series.as_deref(), x)
}

fn rate_with(filter: &Filter, series: Option<&[f64]>, x: f64) -> Result<f64> {
    let eval = |t: f64| match series {
        Some(s) if t <= SERIES_CUTOFF => one_minus_response_series(s, t),
        _ => 1.0 - relative_response(filter, t),
    };
    let full = eval(x);
    let half = eval(0.5 * x);
    let ratio = full / half;
    if full == 0.0 || half == 0.0 || !ratio.is_finite() || ratio <= 0.0 {
        return Err(Error::Degenerate(format!("1 - F vanishes or changes sign near x = {x}")));
    }
    Ok(ratio.log2())
}

/// Gershgorin positivity of the filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityReport {
    pub dominant: bool,
    pub margin: f64,
}

pub fn positivity_check(filter: &Filter) -> PositivityReport {
    let margin = filter.dominance_margin();
    PositivityReport { dominant: margin > 0.0, margin }
}

/// Largest `F(x) - 1` over `points` uniform samples of `(0, π]`; positive
/// values mean the response overshoots one.
pub fn response_overshoot(filter: &Filter, points: usize) -> f64 {
    curve_abscissae(points).into_iter().map(|x| relative_response(filter, x) - 1.0).fold(f64::NEG_INFINITY, f64::max)
}

/// Spectral radius of the operator matrix and the `(π N_x)^α` bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenReport {
    pub max_abs_eig: f64,
    pub bound: f64,
    pub iterations: usize,
}

impl EigenReport {
    pub fn within_bound(&self) -> bool {
        self.max_abs_eig <= self.bound
    }
}

fn toeplitz_apply(values: &[f64], shift: f64, v: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = shift * v[i];
        for (j, &vj) in v.iter().enumerate() {
            acc -= values[i.abs_diff(j)] * vj;
        }
        *o = acc;
    }
}

/// Power iteration on `D + shift·I`; returns the Rayleigh quotient of the
/// dominant eigenvalue (shift included) and the iteration count.
fn power_iteration(values: &[f64], size: usize, shift: f64, start: Vec<f64>) -> Result<(f64, usize)> {
    let mut v = start;
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= norm);
    let mut w = vec![0.0; size];
    let mut lambda = 0.0;
    for it in 1..=POWER_ITERATION_MAX {
        toeplitz_apply(values, shift, &v, &mut w);
        let next: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok((0.0, it));
        }
        for (a, b) in v.iter_mut().zip(&w) {
            *a = b / norm;
        }
        if it > 1 && (next - lambda).abs() <= POWER_ITERATION_TOL * next.abs() {
            return Ok((next, it));
        }
        lambda = next;
    }
    Err(Error::NonConvergence { what: "power iteration", iterations: POWER_ITERATION_MAX })
}

fn interior_size(stencil: &Stencil) -> Result<usize> {
    let n = stencil.grid().node_count();
    if n > EIGEN_MAX_NODES {
        return Err(Error::InvalidParameter(format!(
            "eigenvalue probes are limited to {EIGEN_MAX_NODES} nodes, got {n}"
        )));
    }
    Ok(n - 2)
}

/// Start vector with components along every eigenvector of a symmetric
/// Toeplitz matrix (both the symmetric and the skew ones).
fn start_vector(size: usize, oscillating: bool) -> Vec<f64> {
    (0..size)
        .map(|i| {
            let t = (i + 1) as f64 / (size + 1) as f64;
            let base = (PI * t).sin() + 0.25 * t;
            if oscillating && i % 2 == 1 {
                -base
            } else {
                base
            }
        })
        .collect()
}

/// Largest eigenvalue magnitude of the interior operator matrix, by power
/// iteration.
pub fn eigen_bound_estimate(stencil: &Stencil) -> Result<EigenReport> {
    let size = interior_size(stencil)?;
    let (lambda, iterations) = power_iteration(stencil.values(), size, 0.0, start_vector(size, true))?;
    let bound = (PI * stencil.grid().node_count() as f64).powf(stencil.alpha());
    Ok(EigenReport { max_abs_eig: lambda.abs(), bound, iterations })
}

/// Both ends of the operator spectrum `(λ_min, λ_max)`: the dominant
/// eigenvalue from plain power iteration, the other end from power
/// iteration on the matrix shifted by the dominant one.
pub fn spectrum_extremes(stencil: &Stencil) -> Result<(f64, f64)> {
    let size = interior_size(stencil)?;
    let (dominant, _) = power_iteration(stencil.values(), size, 0.0, start_vector(size, true))?;
    let (shifted, _) = power_iteration(stencil.values(), size, -dominant, start_vector(size, false))?;
    let other = shifted + dominant;
    Ok(if dominant <= other { (dominant, other) } else { (other, dominant) })
}

/// `points` uniform abscissae `π i / points`, `i = 1..=points`.
pub fn curve_abscissae(points: usize) -> Vec<f64> {
    (1..=points).map(|i| PI * i as f64 / points as f64).collect()
}

/// Sampled `F(x)` for one filter.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseCurve {
    pub alpha: f64,
    pub order: usize,
    pub x: Vec<f64>,
    pub response: Vec<f64>,
}

/// Sampled `r(x)` for one filter.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRateCurve {
    pub alpha: f64,
    pub order: usize,
    pub x: Vec<f64>,
    pub rate: Vec<f64>,
}

pub fn response_curve(filter: &Filter, points: usize) -> ResponseCurve {
    let x = curve_abscissae(points);
    let response = x.iter().map(|&t| relative_response(filter, t)).collect();
    ResponseCurve { alpha: filter.alpha(), order: filter.spec().order(), x, response }
}

pub fn rate_curve(filter: &Filter, points: usize) -> Result<ConvergenceRateCurve> {
    let x = curve_abscissae(points);
    let series = response_series(filter);
    let rate = x.iter().map(|&t| rate_with(filter, Some(&series), t)).collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceRateCurve { alpha: filter.alpha(), order: filter.spec().order(), x, rate })
}

fn write_curve<W: Write>(out: W, alpha: f64, order: usize, name: &str, x: &[f64], y: &[f64]) -> Result<()> {
    let rows: Vec<Vec<String>> = x.iter().zip(y).map(|(&a, &b)| vec![sig17(a), sig17(b)]).collect();
    write_table(out, Some(&format!("alpha={alpha},N={order}")), &format!("x,{name}"), &rows)
}

impl ResponseCurve {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_curve(out, self.alpha, self.order, "F", &self.x, &self.response)
    }
}

impl ConvergenceRateCurve {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_curve(out, self.alpha, self.order, "r", &self.x, &self.rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{build_filter, FilterSpec};
    use crate::stencil::{build_stencil, GridSpec};

    fn filter(alpha: f64, order: usize) -> Filter {
        build_filter(FilterSpec::new(alpha, order).unwrap()).unwrap()
    }

    #[test]
    fn identity_filter_response() {
        let f = filter(1.3, 2);
        for x in [0.0, 0.4, 2.0, PI] {
            assert_eq!(filter_response(&f, x), 1.0);
        }
        let expected = (2.0 / PI).powf(1.3);
        assert!((relative_response(&f, PI) - expected).abs() < 1e-15);
        assert_eq!(relative_response(&f, 0.0), 1.0);
    }

    #[test]
    fn fourth_order_response_at_nyquist() {
        let f = filter(1.0, 4);
        assert!((filter_response(&f, PI) - 7.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn filter_peaks_at_nyquist_and_is_symmetric() {
        for alpha in [0.2, 0.7, 1.3, 1.8] {
            for order in (4..=16).step_by(2) {
                let f = filter(alpha, order);
                let peak = filter_response(&f, PI);
                for i in 0..=400 {
                    let x = PI * i as f64 / 400.0;
                    assert!(filter_response(&f, x) <= peak * (1.0 + 1e-14), "alpha={alpha} N={order} x={x}");
                    let t = x;
                    let d = filter_response(&f, PI - t) - filter_response(&f, PI + t);
                    assert!(d.abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn flatness_improves_with_order() {
        let alpha = 1.3;
        for i in 1..=10 {
            let x = 0.05 * i as f64;
            let mut prev = f64::INFINITY;
            for order in (2..=16).step_by(2) {
                let e = one_minus_response(&filter(alpha, order), x).abs();
                assert!(e < prev, "x={x} N={order}");
                prev = e;
            }
        }
    }

    #[test]
    fn series_matches_direct_where_both_are_accurate() {
        for order in [2, 6, 12] {
            let f = filter(0.9, order);
            for x in [1.0, 1.5, 2.0] {
                let a = one_minus_response(&f, x);
                let b = 1.0 - relative_response(&f, x);
                assert!((a - b).abs() <= 1e-12 + 1e-6 * b.abs(), "N={order} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn rate_tends_to_order() {
        for order in (2..=16).step_by(2) {
            let r = spectral_rate(&filter(1.3, order), 0.05).unwrap();
            assert!((r - order as f64).abs() <= 0.1, "N={order}: {r}");
        }
        let r = spectral_rate(&filter(1.3, 4), 0.05).unwrap();
        assert!((r - 4.0).abs() <= 0.05);
    }

    #[test]
    fn rate_drops_toward_nyquist() {
        for order in (4..=16).step_by(2) {
            let f = filter(1.3, order);
            let r0 = spectral_rate(&f, 1.5).unwrap();
            let r1 = spectral_rate(&f, PI).unwrap();
            assert!(r1 < r0, "N={order}");
            assert!(r0 < order as f64);
        }
    }

    #[test]
    fn rate_domain() {
        let f = filter(1.0, 4);
        assert!(spectral_rate(&f, 0.0).is_err());
        assert!(spectral_rate(&f, 4.0).is_err());
    }

    #[test]
    fn positivity_examples() {
        let r = positivity_check(&filter(0.5, 2));
        assert!(r.dominant);
        assert_eq!(r.margin, 1.0);
        let r = positivity_check(&filter(1.8, 4));
        assert!(r.dominant);
        assert!((r.margin - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tridiagonal_spectrum() {
        let s = build_stencil(&filter(2.0, 2), GridSpec::new(5).unwrap()).unwrap();
        let report = eigen_bound_estimate(&s).unwrap();
        let h: f64 = 0.25;
        let exact = 4.0 / (h * h) * (3.0 * PI * h / 2.0).sin().powi(2);
        assert!((report.max_abs_eig - exact).abs() <= 1e-7 * exact, "{report:?}");
        assert!(report.within_bound());
        let (lo, hi) = spectrum_extremes(&s).unwrap();
        let smallest = 4.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        assert!((lo + exact).abs() <= 1e-6 * exact);
        assert!((hi + smallest).abs() <= 1e-6 * exact, "{hi} vs {}", -smallest);
    }

    #[test]
    fn eigen_bound_and_scaling() {
        let f = filter(1.3, 8);
        let small = eigen_bound_estimate(&build_stencil(&f, GridSpec::new(41).unwrap()).unwrap()).unwrap();
        assert!(small.within_bound());
        let big = eigen_bound_estimate(&build_stencil(&f, GridSpec::new(81).unwrap()).unwrap()).unwrap();
        let ratio = big.max_abs_eig / small.max_abs_eig;
        assert!((ratio / 2f64.powf(1.3) - 1.0).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn operator_is_negative_definite() {
        for alpha in [0.5, 1.0, 1.5, 2.0] {
            for order in [2, 4, 8] {
                let s = build_stencil(&filter(alpha, order), GridSpec::new(21).unwrap()).unwrap();
                let (lo, hi) = spectrum_extremes(&s).unwrap();
                assert!(lo < hi && hi < 0.0, "alpha={alpha} N={order}: {lo} {hi}");
                let bound = (PI * 21.0).powf(alpha) * 1.01;
                assert!(-lo <= bound);
            }
        }
    }

    #[test]
    fn eigen_probe_size_limit() {
        let s = build_stencil(&filter(1.0, 2), GridSpec::new(2001).unwrap()).unwrap();
        assert!(matches!(eigen_bound_estimate(&s), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn curves_and_csv() {
        let f = filter(1.3, 2);
        let c = response_curve(&f, 8);
        assert_eq!(c.x.len(), 8);
        assert_eq!(*c.x.last().unwrap(), PI);
        for (x, v) in c.x.iter().zip(&c.response) {
            assert_eq!(*v, sinc_half(*x).powf(1.3));
        }
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# alpha=1.3,N=2"));
        assert_eq!(lines.next(), Some("x,F"));
        for (line, (x, v)) in lines.zip(c.x.iter().zip(&c.response)) {
            let mut parts = line.split(',').map(|p| p.parse::<f64>().unwrap());
            assert_eq!(parts.next(), Some(*x));
            assert_eq!(parts.next(), Some(*v));
        }
        let r = rate_curve(&filter(1.3, 10), 512).unwrap();
        assert!((r.rate[0] - 10.0).abs() < 0.1);
    }

    #[test]
    fn overshoot_is_reported() {
        let f = filter(1.3, 16);
        let o = response_overshoot(&f, 512);
        assert!(o.is_finite());
        assert!(o < 1e-3);
    }
}
