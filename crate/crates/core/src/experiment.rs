//! Grid-refinement experiments and diagnostic reports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::csv::{sig17, write_table};
use crate::error::{Error, Result};
use crate::filter::{build_filter, Filter, FilterSpec};
use crate::reference::{cosine_riesz_exact, poly_riesz_exact, CosineCase, PolynomialCase};
use crate::spectral::{
    eigen_bound_estimate, positivity_check, rate_curve, response_curve, response_overshoot, spectral_rate, EigenReport,
    PositivityReport,
};
use crate::stencil::{apply_operator, build_stencil, build_stencil_with_state, extend_stencil, GridSpec};

pub const DEFAULT_MIN_NODES: usize = 11;
pub const DEFAULT_LEVELS: usize = 6;

/// Dyadic refinement `N_i = 2^i (N_min - 1) + 1`, `i = 0..levels`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefinementSchedule {
    min_nodes: usize,
    levels: usize,
}

impl RefinementSchedule {
    pub fn new(min_nodes: usize, levels: usize) -> Result<Self> {
        if min_nodes < 3 {
            return Err(Error::InvalidParameter(format!("coarsest grid needs at least 3 nodes, got {min_nodes}")));
        }
        if levels == 0 || levels > 24 {
            return Err(Error::InvalidParameter(format!("levels must lie in 1..=24, got {levels}")));
        }
        Ok(Self { min_nodes, levels })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn min_nodes(&self) -> usize {
        self.min_nodes
    }

    pub fn node_count(&self, level: usize) -> usize {
        (1 << level) * (self.min_nodes - 1) + 1
    }

    /// Interior nodes of the coarsest grid, `x_j = j / (N_min - 1)`.
    pub fn common_nodes(&self) -> Vec<f64> {
        (1..self.min_nodes - 1).map(|j| j as f64 / (self.min_nodes - 1) as f64).collect()
    }

    /// Index of common node `j` (1-based) on level `level`.
    pub fn common_index(&self, level: usize, j: usize) -> usize {
        j << level
    }
}

impl Default for RefinementSchedule {
    fn default() -> Self {
        Self { min_nodes: DEFAULT_MIN_NODES, levels: DEFAULT_LEVELS }
    }
}

/// Test function family of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Polynomial { q: u32 },
    Cosine { cycles: u32 },
}

/// Summed errors `E_i^N` over the common nodes and rates
/// `R_i^N = log₂(E_i / E_{i+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    pub family: Family,
    pub alpha: f64,
    pub schedule: RefinementSchedule,
    pub orders: Vec<usize>,
    /// `errors[k][i]` for order `orders[k]` and level `i`.
    pub errors: Vec<Vec<f64>>,
}

impl ErrorTable {
    fn column(&self, order: usize) -> Option<&Vec<f64>> {
        self.orders.iter().position(|&n| n == order).map(|k| &self.errors[k])
    }

    pub fn error(&self, level: usize, order: usize) -> Option<f64> {
        self.column(order)?.get(level).copied()
    }

    /// `None` on the last level.
    pub fn rate(&self, level: usize, order: usize) -> Option<f64> {
        let col = self.column(order)?;
        let next = col.get(level + 1)?;
        Some((col[level] / next).log2())
    }

    /// Rows `i,N,E,R` by level, then order; `R` is empty on the last level.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut rows = Vec::new();
        for i in 0..self.schedule.levels() {
            for &n in &self.orders {
                let e = self.error(i, n).expect("table is complete");
                let r = self.rate(i, n).map(sig17).unwrap_or_default();
                rows.push(vec![i.to_string(), n.to_string(), sig17(e), r]);
            }
        }
        write_table(out, None, "i,N,E,R", &rows)
    }
}

fn validate_orders(orders: &[usize]) -> Result<()> {
    if orders.is_empty() {
        return Err(Error::InvalidParameter("at least one order is required".into()));
    }
    Ok(())
}

fn run<U, X>(
    alpha: f64,
    orders: &[usize],
    schedule: RefinementSchedule,
    u: U,
    boundary: (f64, f64),
    exact: X,
) -> Result<Vec<Vec<f64>>>
where
    U: Fn(f64) -> f64,
    X: Fn(f64) -> Result<f64>,
{
    validate_orders(orders)?;
    let nodes = schedule.common_nodes();
    let reference = nodes.iter().map(|&x| exact(x)).collect::<Result<Vec<_>>>()?;
    let filters =
        orders.iter().map(|&n| FilterSpec::new(alpha, n).and_then(build_filter)).collect::<Result<Vec<_>>>()?;

    let mut table = Vec::with_capacity(orders.len());
    for filter in &filters {
        let mut column = Vec::with_capacity(schedule.levels());
        let (mut stencil, mut state) = build_stencil_with_state(filter, GridSpec::new(schedule.node_count(0))?)?;
        for level in 0..schedule.levels() {
            if level > 0 {
                (stencil, state) = extend_stencil(&state, GridSpec::new(schedule.node_count(level))?)?;
            }
            let grid = *stencil.grid();
            let samples: Vec<f64> = (0..grid.node_count()).map(|i| u(grid.node(i))).collect();
            let approx = apply_operator(&stencil, &samples, boundary.0, boundary.1)?;
            let e: f64 = reference
                .iter()
                .enumerate()
                .map(|(j, r)| (approx[schedule.common_index(level, j + 1) - 1] - r).abs())
                .sum();
            column.push(e);
        }
        table.push(column);
    }
    Ok(table)
}

/// Polynomial test `u = x^q (1 - x)^q` on `levels` refinement levels.
pub fn run_poly_experiment(q: u32, alpha: f64, orders: &[usize], levels: usize) -> Result<ErrorTable> {
    let case = PolynomialCase::new(q, alpha)?;
    let schedule = RefinementSchedule::new(DEFAULT_MIN_NODES, levels)?;
    let errors = run(alpha, orders, schedule, |x| case.value(x), (0.0, 0.0), |x| poly_riesz_exact(&case, x))?;
    Ok(ErrorTable { family: Family::Polynomial { q }, alpha, schedule, orders: orders.to_vec(), errors })
}

/// Cosine test `u = cos(2π f x)` on `[0, 1]`, boundary samples one.
pub fn run_cosine_experiment(cycles: u32, alpha: f64, orders: &[usize], levels: usize) -> Result<ErrorTable> {
    let case = CosineCase::new(cycles, alpha)?;
    let schedule = RefinementSchedule::new(DEFAULT_MIN_NODES, levels)?;
    let errors = run(alpha, orders, schedule, |x| case.value(x), (1.0, 1.0), |x| cosine_riesz_exact(&case, x))?;
    Ok(ErrorTable { family: Family::Cosine { cycles }, alpha, schedule, orders: orders.to_vec(), errors })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes `response_N.csv` and `rate_N.csv` for each order into `dir`.
pub fn emit_spectrum(alpha: f64, orders: &[usize], points: usize, dir: &Path) -> Result<Vec<PathBuf>> {
    validate_orders(orders)?;
    if points == 0 {
        return Err(Error::InvalidParameter("at least one curve point is required".into()));
    }
    let filters =
        orders.iter().map(|&n| FilterSpec::new(alpha, n).and_then(build_filter)).collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for filter in &filters {
        let n = filter.spec().order();
        let path = dir.join(format!("response_{n}.csv"));
        response_curve(filter, points).write_csv(create(&path)?)?;
        written.push(path);
        let path = dir.join(format!("rate_{n}.csv"));
        rate_curve(filter, points)?.write_csv(create(&path)?)?;
        written.push(path);
    }
    Ok(written)
}

/// Diagnostics for one order.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub order: usize,
    pub coeffs: Vec<f64>,
    pub positivity: PositivityReport,
    pub eigen: EigenReport,
    /// `(x, r(x))` at `x = 0.2, 0.1, 0.05`.
    pub rates: Vec<(f64, f64)>,
    pub overshoot: f64,
}

impl CheckReport {
    /// Flatness holds when each sampled rate is within 0.15 of `N`.
    pub fn flat(&self) -> bool {
        self.rates.iter().all(|&(_, r)| (r - self.order as f64).abs() <= 0.15)
    }

    pub fn passed(&self) -> bool {
        self.positivity.dominant && self.eigen.within_bound() && self.flat()
    }
}

pub const CHECK_RATE_POINTS: [f64; 3] = [0.2, 0.1, 0.05];

/// Positivity, eigenvalue bound and flatness for each order on `nodes`.
pub fn run_checks(alpha: f64, orders: &[usize], nodes: usize) -> Result<Vec<CheckReport>> {
    validate_orders(orders)?;
    let grid = GridSpec::new(nodes)?;
    orders
        .iter()
        .map(|&n| {
            let filter: Filter = build_filter(FilterSpec::new(alpha, n)?)?;
            let stencil = build_stencil(&filter, grid)?;
            let rates =
                CHECK_RATE_POINTS.iter().map(|&x| spectral_rate(&filter, x).map(|r| (x, r))).collect::<Result<_>>()?;
            Ok(CheckReport {
                order: n,
                coeffs: filter.coeffs().to_vec(),
                positivity: positivity_check(&filter),
                eigen: eigen_bound_estimate(&stencil)?,
                rates,
                overshoot: response_overshoot(&filter, 512),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_shapes() {
        let s = RefinementSchedule::default();
        assert_eq!((0..6).map(|i| s.node_count(i)).collect::<Vec<_>>(), [11, 21, 41, 81, 161, 321]);
        assert_eq!(s.common_nodes().len(), 9);
        for level in 0..6 {
            let grid = GridSpec::new(s.node_count(level)).unwrap();
            for (j, &x) in s.common_nodes().iter().enumerate() {
                assert!((grid.node(s.common_index(level, j + 1)) - x).abs() < 1e-15);
            }
        }
        assert!(RefinementSchedule::new(2, 3).is_err());
        assert!(RefinementSchedule::new(11, 0).is_err());
    }

    #[test]
    fn table_one_first_cell() {
        let t = run_poly_experiment(6, 0.2, &[4], 2).unwrap();
        let e0 = t.error(0, 4).unwrap();
        assert!((e0 / 8.492e-7 - 1.0).abs() < 0.05, "{e0}");
        assert!(t.rate(1, 4).is_none());
        assert!(t.rate(0, 4).is_some());
    }

    #[test]
    fn experiment_validation() {
        assert!(matches!(run_poly_experiment(6, 1.0, &[4], 2), Err(Error::SingularConstant(_))));
        assert!(run_poly_experiment(1, 0.5, &[4], 2).is_err());
        assert!(run_poly_experiment(6, 0.5, &[], 2).is_err());
        assert!(run_poly_experiment(6, 0.5, &[5], 2).is_err());
        assert!(run_cosine_experiment(0, 0.5, &[4], 2).is_err());
    }

    #[test]
    fn table_csv_layout() {
        let t = run_poly_experiment(6, 1.8, &[4, 6], 2).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "i,N,E,R");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0,4,"));
        assert!(lines[2].starts_with("0,6,"));
        assert!(lines[3].starts_with("1,4,") && lines[3].ends_with(','));
        let cells: Vec<&str> = lines[1].split(',').collect();
        let r: f64 = cells[3].parse().unwrap();
        assert_eq!(r, t.rate(0, 4).unwrap());
    }

    #[test]
    fn spectrum_files() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_spectrum(1.3, &[2, 10], 64, dir.path()).unwrap();
        assert_eq!(files.len(), 4);
        for name in ["response_2.csv", "rate_2.csv", "response_10.csv", "rate_10.csv"] {
            let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
            assert_eq!(text.lines().count(), 66);
        }
    }

    #[test]
    fn checks_pass_for_moderate_orders() {
        let reports = run_checks(1.3, &[2, 8], 41).unwrap();
        assert!(reports.iter().all(CheckReport::passed), "{reports:?}");
    }
}
