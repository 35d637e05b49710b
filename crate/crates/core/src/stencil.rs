//! Central Grünwald–Letnikov kernel, the filtered stencil, and operator
//! application.
//!
//! The raw kernel is `K(|n|h) = ((-1)^n / h^α) · binom(α, α/2 + n)`. It is
//! generated at unit spacing by the ratio recurrence and scaled by
//! `h^{-α} = (N_x - 1)^α` on output, so a resumed stencil repeats exactly
//! the arithmetic of a fresh build.

use std::io::Write;

use crate::csv::{sig17, write_table};
use crate::error::{Error, Result};
use crate::filter::Filter;
use crate::special::gamma;

/// Uniform grid of `N_x` nodes on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    node_count: usize,
}

impl GridSpec {
    pub fn new(node_count: usize) -> Result<Self> {
        if node_count < 3 {
            return Err(Error::InvalidParameter(format!("grid needs at least 3 nodes, got {node_count}")));
        }
        Ok(Self { node_count })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Number of intervals, `N_x - 1`.
    pub fn intervals(&self) -> usize {
        self.node_count - 1
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.intervals() as f64
    }

    /// Abscissa of node `i`.
    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.intervals() as f64
    }

    /// `h^{-α}`.
    fn kernel_scale(&self, alpha: f64) -> Result<f64> {
        let s = (self.intervals() as f64).powf(alpha);
        if !s.is_finite() {
            return Err(Error::Instability(format!("h^-alpha overflows for {} nodes", self.node_count)));
        }
        Ok(s)
    }
}

/// Unit-spacing seed `Γ(α+1) / Γ(α/2+1)²`.
fn unit_seed(alpha: f64) -> Result<f64> {
    let half = gamma(0.5 * alpha + 1.0)?;
    Ok(gamma(alpha + 1.0)? / (half * half))
}

/// Appends unit-spacing kernel values until `values.len() == len`.
fn continue_recurrence(alpha: f64, values: &mut Vec<f64>, len: usize) {
    let half = 0.5 * alpha;
    for j in values.len()..len {
        let jf = j as f64;
        let prev = values[j - 1];
        values.push(-((half - jf + 1.0) / (half + jf)) * prev);
    }
}

fn unit_kernel(alpha: f64, len: usize) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(len.max(1));
    values.push(unit_seed(alpha)?);
    continue_recurrence(alpha, &mut values, len);
    Ok(values)
}

/// One side `k_0..k_M` of the unfiltered central kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct RawKernel {
    alpha: f64,
    grid: GridSpec,
    values: Vec<f64>,
}

impl RawKernel {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 2], got {alpha}")));
    }
    Ok(())
}

/// Raw kernel values `k_0..=k_max_index` on `grid`.
pub fn raw_kernel(alpha: f64, grid: GridSpec, max_index: usize) -> Result<RawKernel> {
    check_alpha(alpha)?;
    if max_index < 1 {
        return Err(Error::InvalidParameter("raw kernel needs at least two terms".into()));
    }
    let scale = grid.kernel_scale(alpha)?;
    let values = unit_kernel(alpha, max_index + 1)?.into_iter().map(|v| v * scale).collect();
    Ok(RawKernel { alpha, grid, values })
}

/// Filtered one-sided stencil `k̃_0..k̃_{N_x-2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    filter: Filter,
    grid: GridSpec,
    values: Vec<f64>,
}

impl Stencil {
    pub fn alpha(&self) -> f64 {
        self.filter.alpha()
    }

    pub fn order(&self) -> usize {
        self.filter.spec().order()
    }

    pub fn filter(&self) -> &Filter {
        &self.filter
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entry `D_{i,j}` of the interior operator matrix (`N_x - 2` square),
    /// with the sign of the derivative approximation.
    pub fn matrix_entry(&self, i: usize, j: usize) -> f64 {
        -self.values[i.abs_diff(j)]
    }

    /// Writes `n,k_n` rows at 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let rows: Vec<Vec<String>> =
            self.values.iter().enumerate().map(|(n, &k)| vec![n.to_string(), sig17(k)]).collect();
        write_table(out, None, "n,k_n", &rows)
    }
}

/// Saved state for growing a stencil to a finer grid without recomputing
/// the kernel from the seed.
///
/// Holds the raw kernel tail `k_{N_x-1-max(N_h,1)} .. k_{N_x+N_h-2}` (the
/// values the new outer stencil entries need, plus at least one value to
/// continue the recurrence from) and the already filtered entries, both at
/// unit spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct ResumeState {
    filter: Filter,
    grid: GridSpec,
    tail_start: usize,
    tail: Vec<f64>,
    filtered: Vec<f64>,
}

impl ResumeState {
    pub fn filter(&self) -> &Filter {
        &self.filter
    }

    pub fn alpha(&self) -> f64 {
        self.filter.alpha()
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Saved raw values at unit spacing, starting at kernel index
    /// [`ResumeState::tail_start`].
    pub fn raw_tail(&self) -> &[f64] {
        &self.tail
    }

    pub fn tail_start(&self) -> usize {
        self.tail_start
    }

    /// Reassembles a state from its parts, checking that they fit together.
    pub fn from_parts(
        filter: Filter,
        grid: GridSpec,
        tail_start: usize,
        tail: Vec<f64>,
        filtered: Vec<f64>,
    ) -> Result<Self> {
        let state = Self { filter, grid, tail_start, tail, filtered };
        state.validate()?;
        Ok(state)
    }

    fn validate(&self) -> Result<()> {
        let half = self.filter.half_width();
        let n = self.grid.node_count();
        let start = tail_start(n, half);
        let end = n + half - 1;
        if self.tail_start != start || self.tail.len() != end - start {
            return Err(Error::StateMismatch(format!(
                "raw tail covers {}..{} but a half width of {half} on {n} nodes needs {start}..{end}",
                self.tail_start,
                self.tail_start + self.tail.len()
            )));
        }
        if self.filtered.len() != n - 1 {
            return Err(Error::StateMismatch(format!(
                "{} filtered values saved for a {n}-node grid",
                self.filtered.len()
            )));
        }
        Ok(())
    }
}

fn tail_start(nodes: usize, half: usize) -> usize {
    (nodes - 1).saturating_sub(half.max(1))
}

fn convolve_mirrored(filter: &[f64], raw: impl Fn(usize) -> f64, n: usize) -> f64 {
    let half = filter.len() as isize - 1;
    let mut acc = 0.0;
    for m in -half..=half {
        let idx = (n as isize - m).unsigned_abs();
        acc += filter[m.unsigned_abs()] * raw(idx);
    }
    acc
}

fn finish(filter: &Filter, grid: GridSpec, unit: &[f64], filtered: Vec<f64>) -> Result<(Stencil, ResumeState)> {
    let half = filter.half_width();
    let n = grid.node_count();
    let scale = grid.kernel_scale(filter.alpha())?;
    let tail_start = tail_start(n, half);
    let tail = unit[tail_start..n + half - 1].to_vec();
    let values = filtered.iter().map(|v| v * scale).collect();
    let stencil = Stencil { filter: filter.clone(), grid, values };
    let state = ResumeState { filter: filter.clone(), grid, tail_start, tail, filtered };
    Ok((stencil, state))
}

/// Filtered stencil on `grid`, together with the state needed to extend it.
pub fn build_stencil_with_state(filter: &Filter, grid: GridSpec) -> Result<(Stencil, ResumeState)> {
    let half = filter.half_width();
    let n = grid.node_count();
    let unit = unit_kernel(filter.alpha(), n + half - 1)?;
    let g = filter.coeffs();
    let filtered: Vec<f64> = (0..n - 1).map(|i| convolve_mirrored(g, |j| unit[j], i)).collect();
    finish(filter, grid, &unit, filtered)
}

/// Filtered stencil `k̃_n = Σ_{|m| <= N_h} g_{|m|} k_{|n-m|}` for
/// `n = 0..N_x-2`.
pub fn build_stencil(filter: &Filter, grid: GridSpec) -> Result<Stencil> {
    build_stencil_with_state(filter, grid).map(|(s, _)| s)
}

/// Grows a stencil to `new_grid` from saved state. The result is identical
/// to [`build_stencil`] on `new_grid`.
pub fn extend_stencil(state: &ResumeState, new_grid: GridSpec) -> Result<(Stencil, ResumeState)> {
    state.validate()?;
    let old_n = state.grid.node_count();
    let new_n = new_grid.node_count();
    if new_n < old_n {
        return Err(Error::InvalidParameter(format!("cannot shrink a stencil from {old_n} to {new_n} nodes")));
    }
    let half = state.filter.half_width();
    let start = state.tail_start;

    // raw values from `start` onwards, continued to the new length
    let mut raw = state.tail.clone();
    let mut full: Vec<f64> = Vec::with_capacity(new_n + half - 1);
    full.resize(start, 0.0);
    full.append(&mut raw);
    continue_recurrence(state.alpha(), &mut full, new_n + half - 1);

    let g = state.filter.coeffs();
    let mut filtered = state.filtered.clone();
    for i in old_n - 1..new_n - 1 {
        filtered.push(convolve_mirrored(g, |j| full[j], i));
    }
    finish(&state.filter, new_grid, &full, filtered)
}

/// Riesz derivative approximation at the interior nodes `1..N_x-2`.
///
/// `samples` holds `f` at all `N_x` nodes; its first and last entries are
/// replaced by the boundary values `f0` and `f1`. The sign is chosen so
/// that `α = 2`, `N = 2` gives the classical second difference of `f`.
pub fn apply_operator(stencil: &Stencil, samples: &[f64], f0: f64, f1: f64) -> Result<Vec<f64>> {
    let n = stencil.grid.node_count();
    if samples.len() != n {
        return Err(Error::LengthMismatch { expected: n, actual: samples.len() });
    }
    let k = &stencil.values;
    let last = n - 1;
    let out = (1..last)
        .map(|i| {
            let mut acc = k[i] * f0 + k[last - i] * f1;
            for (j, &f) in samples.iter().enumerate().take(last).skip(1) {
                acc += k[i.abs_diff(j)] * f;
            }
            -acc
        })
        .collect();
    Ok(out)
}
