use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use riesz_fd::experiment::{emit_spectrum, run_checks, run_cosine_experiment, run_poly_experiment, DEFAULT_LEVELS};
use riesz_fd::filter::{build_filter, Filter, FilterSpec};
use riesz_fd::reference::{cosine_riesz_exact, poly_riesz_exact, CosineCase, PolynomialCase};
use riesz_fd::spectral::DEFAULT_CURVE_POINTS;
use riesz_fd::stencil::{apply_operator, build_stencil, GridSpec};
use riesz_fd::{csv, Error, Result};

/// High-order central-difference stencils for the Riesz fractional derivative.
#[derive(Parser)]
#[command(name = "riesz-fd", version)]
struct Cli {
    /// Print wall-clock time to stderr
    #[arg(long, global = true)]
    time: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the prefilter coefficients g_0..g_{N_h}
    Filter(FilterArgs),
    /// Write the filtered one-sided stencil as CSV (n,k_n)
    Stencil(StencilArgs),
    /// Apply the operator to a test function and compare with the exact derivative
    Apply(ApplyArgs),
    /// Grid-refinement error tables
    #[command(subcommand)]
    Experiment(Experiment),
    /// Write response_N.csv and rate_N.csv curves
    Spectrum(SpectrumArgs),
    /// Positivity, eigenvalue bound and flatness diagnostics
    Check(CheckArgs),
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    order: usize,
}

#[derive(Args)]
struct StencilArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    order: usize,
    #[arg(long)]
    nodes: usize,
    /// Output file (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ApplyArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    order: usize,
    #[arg(long)]
    nodes: usize,
    /// Polynomial test x^q (1-x)^q
    #[arg(long, conflicts_with = "freq", required_unless_present = "freq")]
    q: Option<u32>,
    /// Cosine test cos(2 pi f x)
    #[arg(long)]
    freq: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Experiment {
    /// x^q (1-x)^q
    Poly(PolyArgs),
    /// cos(2 pi f x)
    Cos(CosArgs),
}

#[derive(Args)]
struct TableArgs {
    #[arg(long)]
    alpha: f64,
    /// Comma-separated even orders
    #[arg(long, value_delimiter = ',', default_value = "4,6,8,10")]
    orders: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_LEVELS)]
    levels: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PolyArgs {
    #[arg(long)]
    q: u32,
    #[command(flatten)]
    table: TableArgs,
}

#[derive(Args)]
struct CosArgs {
    #[arg(long)]
    freq: u32,
    #[command(flatten)]
    table: TableArgs,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long, default_value_t = 1.3)]
    alpha: f64,
    #[arg(long, value_delimiter = ',', default_value = "2,4,6,8,10,12,14,16")]
    orders: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_CURVE_POINTS)]
    points: usize,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, value_delimiter = ',', default_value = "2,4,6,8,10,12,14,16")]
    orders: Vec<usize>,
    #[arg(long, default_value_t = 41)]
    nodes: usize,
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn filter_with_warning(alpha: f64, order: usize) -> Result<Filter> {
    let filter = build_filter(FilterSpec::new(alpha, order)?)?;
    if !filter.is_diagonally_dominant() {
        eprintln!(
            "warning: filter for alpha={alpha}, N={order} is not diagonally dominant (margin {:e})",
            filter.dominance_margin()
        );
    }
    Ok(filter)
}

type ExactFn = Box<dyn Fn(f64) -> Result<f64>>;

fn apply(args: &ApplyArgs) -> Result<()> {
    let filter = filter_with_warning(args.alpha, args.order)?;
    let grid = GridSpec::new(args.nodes)?;
    let stencil = build_stencil(&filter, grid)?;
    let xs: Vec<f64> = (0..grid.node_count()).map(|i| grid.node(i)).collect();
    let (samples, boundary, exact): (Vec<f64>, _, ExactFn) = match (args.q, args.freq) {
        (Some(q), _) => {
            let case = PolynomialCase::new(q, args.alpha)?;
            (xs.iter().map(|&x| case.value(x)).collect(), (0.0, 0.0), Box::new(move |x| poly_riesz_exact(&case, x)))
        }
        (None, Some(f)) => {
            let case = CosineCase::new(f, args.alpha)?;
            (xs.iter().map(|&x| case.value(x)).collect(), (1.0, 1.0), Box::new(move |x| cosine_riesz_exact(&case, x)))
        }
        (None, None) => return Err(Error::InvalidParameter("either --q or --freq is required".into())),
    };
    let approx = apply_operator(&stencil, &samples, boundary.0, boundary.1)?;
    let mut rows = Vec::with_capacity(approx.len());
    for (i, d) in approx.iter().enumerate() {
        let x = xs[i + 1];
        rows.push(vec![csv::sig17(x), csv::sig17(*d), csv::sig17(exact(x)?)]);
    }
    csv::write_table(output(args.out.as_ref())?, None, "x,D,exact", &rows)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Filter(a) => {
            let filter = filter_with_warning(a.alpha, a.order)?;
            let line: Vec<String> = filter.coeffs().iter().map(|g| g.to_string()).collect();
            println!("{}", line.join(","));
        }
        Command::Stencil(a) => {
            let filter = filter_with_warning(a.alpha, a.order)?;
            let stencil = build_stencil(&filter, GridSpec::new(a.nodes)?)?;
            stencil.write_csv(output(a.out.as_ref())?)?;
        }
        Command::Apply(a) => apply(a)?,
        Command::Experiment(Experiment::Poly(a)) => {
            let t = &a.table;
            let table = run_poly_experiment(a.q, t.alpha, &t.orders, t.levels)?;
            table.write_csv(output(t.out.as_ref())?)?;
        }
        Command::Experiment(Experiment::Cos(a)) => {
            let t = &a.table;
            let table = run_cosine_experiment(a.freq, t.alpha, &t.orders, t.levels)?;
            table.write_csv(output(t.out.as_ref())?)?;
        }
        Command::Spectrum(a) => {
            for path in emit_spectrum(a.alpha, &a.orders, a.points, &a.out)? {
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Check(a) => {
            let reports = run_checks(a.alpha, &a.orders, a.nodes)?;
            let mut out = io::stdout().lock();
            for r in &reports {
                let rates: Vec<String> = r.rates.iter().map(|(x, v)| format!("r({x})={v:.4}")).collect();
                writeln!(
                    out,
                    "N={:<2} {} margin={:.6e} max|eig|={:.6e} bound={:.6e} {} overshoot={:.3e}",
                    r.order,
                    if r.passed() { "ok  " } else { "FAIL" },
                    r.positivity.margin,
                    r.eigen.max_abs_eig,
                    r.eigen.bound,
                    rates.join(" "),
                    r.overshoot
                )?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let result = run(&cli);
    if cli.time {
        eprintln!("elapsed: {:.3} s", start.elapsed().as_secs_f64());
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // downstream reader closed the pipe, e.g. `| head`
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
