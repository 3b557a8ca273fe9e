use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use primespline::analysis::{self, count_peaks, variance_series, Dataset, VarianceKind, VarianceWindow};
use primespline::dioph::{build_penalty, solve_all, ProblemConfig, SolveRun};
use primespline::{Backend, CubicSpline, Facade64, InitialGuess, NewtonConfig64, NewtonTrace64, PrimeTable, QuadSpline};

/// Bad invocation or unreadable config; exits with status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser, Debug)]
#[command(name = "primespline", version, about = "Differentiable prime function toolkit")]
struct Cli {
    /// Sieve the primes up to this bound (default 1000000).
    #[arg(long, global = true, value_name = "N")]
    sieve_limit: Option<u64>,

    /// Read the primes from a whitespace separated file instead.
    #[arg(long, global = true, env = "PRIMESPLINE_PRIMES", value_name = "FILE")]
    primes: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Spline::Quad)]
    spline: Spline,

    #[arg(long, global = true, value_enum, default_value_t = Output::Human)]
    output: Output,

    /// Same as `--output csv`.
    #[arg(long, global = true)]
    csv: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Spline {
    Quad,
    Cubic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Human,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Func {
    P,
    Dp,
    Pinv,
    Dpinv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InverseBackend {
    Closed,
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Guess {
    Li,
    Xlnx,
    #[value(name = "R", alias = "r")]
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    #[value(name = "A", alias = "a")]
    A,
    #[value(name = "B", alias = "b")]
    B,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the primes up to a bound.
    Sieve {
        #[arg(long)]
        limit: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate p, p', p^-1 or (p^-1)' at a point or on a grid.
    Eval {
        #[arg(long = "fn", value_enum)]
        func: Func,
        #[arg(long, allow_hyphen_values = true, conflicts_with = "grid", required_unless_present = "grid")]
        x: Option<f64>,
        /// `A:B:STEP`
        #[arg(long)]
        grid: Option<String>,
        /// Inverse method; by default closed form inside the table and Newton beyond.
        #[arg(long, value_enum)]
        backend: Option<InverseBackend>,
        #[arg(long, value_enum, default_value_t = Guess::Li)]
        y0: Guess,
        /// Print the Newton iterates instead of the values.
        #[arg(long)]
        trace: bool,
    },
    /// Integer coefficients of the parabolas.
    Table1 {
        #[arg(long)]
        from: usize,
        #[arg(long)]
        to: usize,
    },
    /// Triplets where the cubic spline loses monotonicity.
    Triplets {
        #[arg(long)]
        count: usize,
    },
    /// pi, p^-1, li and R side by side.
    Compare {
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        step: f64,
    },
    /// Local variance A or B on a window.
    Variance {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        x0: f64,
        /// Window width (default x0 / 4).
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        step: f64,
    },
    /// Regenerate the plot datasets as CSV files.
    Figures {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=analysis::FIGURES as u64))]
        which: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Search prime solutions of a polynomial system.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

impl Cli {
    fn output(&self) -> Output {
        if self.csv {
            Output::Csv
        } else {
            self.output
        }
    }

    fn backend(&self) -> Backend {
        match self.spline {
            Spline::Quad => Backend::Quad,
            Spline::Cubic => Backend::Cubic,
        }
    }

    fn table(&self) -> Result<PrimeTable> {
        match (&self.primes, self.sieve_limit) {
            (Some(_), Some(_)) => Err(usage("give either --primes or --sieve-limit, not both")),
            (Some(path), None) => {
                PrimeTable::load(path).with_context(|| format!("loading primes from {}", path.display()))
            }
            (None, limit) => Ok(PrimeTable::sieve(limit.unwrap_or(1_000_000))?),
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let out = cli.output();
    match &cli.command {
        Command::Sieve { limit, out: path } => {
            let t = PrimeTable::sieve(*limit)?;
            match path {
                Some(p) => t.write_to(io::BufWriter::new(fs::File::create(p)?))?,
                None => t.write_to(io::stdout().lock())?,
            }
            Ok(())
        }
        Command::Eval { func, x, grid, backend, y0, trace } => {
            let xs = match (x, grid) {
                (Some(x), _) => vec![*x],
                (None, Some(g)) => parse_grid(g)?,
                (None, None) => return Err(usage("give --x or --grid")),
            };
            let inverse = matches!(func, Func::Pinv | Func::Dpinv);
            if backend.is_some() && !inverse {
                return Err(usage("--backend applies to pinv and dpinv only"));
            }
            if *backend == Some(InverseBackend::Closed) && cli.spline == Spline::Cubic {
                return Err(usage("the cubic spline has no closed-form inverse"));
            }
            if *trace && (*func != Func::Pinv || *backend == Some(InverseBackend::Closed)) {
                return Err(usage("--trace needs --fn pinv with the Newton backend"));
            }
            let t = cli.table()?;
            let f = Facade64::new(&t, cli.backend())?;
            let cfg = NewtonConfig64 { y0: guess(*y0), ..Default::default() };
            if *trace {
                let mut rows = Table::new(&["x", "attempts", "k", "y", "residual", "dp", "eps"]);
                for &x in &xs {
                    let tr = newton_trace(&f, x, &cfg)?;
                    for (k, s) in tr.steps.iter().enumerate() {
                        rows.push(vec![
                            Cell::F(x),
                            Cell::I(tr.attempts as i128),
                            Cell::I(k as i128),
                            Cell::F(s.y),
                            Cell::F(s.residual),
                            Cell::F(s.dp),
                            Cell::F(s.eps),
                        ]);
                    }
                }
                return rows.emit(out);
            }
            let quad = QuadSpline::new(&t)?;
            let mut rows = Table::new(&["x", func_name(*func)]);
            for &x in &xs {
                let v = match (func, backend) {
                    (Func::P, _) => f.p_of(x),
                    (Func::Dp, _) => f.dp_of(x),
                    (Func::Pinv, None) => f.pinv_of(x)?,
                    (Func::Dpinv, None) => f.dpinv_of(x)?,
                    (Func::Pinv, Some(InverseBackend::Closed)) => quad.eval_inverse(x)?,
                    (Func::Dpinv, Some(InverseBackend::Closed)) => quad.eval_inverse_deriv(x)?,
                    (Func::Pinv, Some(InverseBackend::Newton)) => f.pinv_newton(x, &cfg)?.0,
                    (Func::Dpinv, Some(InverseBackend::Newton)) => 1.0 / f.dp_of(f.pinv_newton(x, &cfg)?.0),
                };
                rows.push(vec![Cell::F(x), Cell::F(v)]);
            }
            if out == Output::Human && xs.len() == 1 {
                println!("{}", rows.rows[0][1]);
                return Ok(());
            }
            rows.emit(out)
        }
        Command::Table1 { from, to } => {
            if from > to {
                return Err(usage("--from must not exceed --to"));
            }
            let t = cli.table()?;
            let q = QuadSpline::new(&t)?;
            let mut rows = Table::new(&[
                "i", "p", "alpha_l", "beta_l", "gamma_l", "d_l", "alpha_r", "beta_r", "gamma_r", "d_r",
            ]);
            for i in *from..=*to {
                let r = q.coeff_row(i)?;
                rows.push(
                    [i as i128, r.p_i as i128, r.alpha_l, r.beta_l, r.gamma_l, r.d_l, r.alpha_r, r.beta_r, r.gamma_r, r.d_r]
                        .into_iter()
                        .map(Cell::I)
                        .collect(),
                );
            }
            rows.emit(out)
        }
        Command::Triplets { count } => {
            let t = cli.table()?;
            let c = CubicSpline::new(&t)?;
            let mut rows = Table::new(&["i", "p_im1", "p_i", "p_ip1", "d_i", "violates"]);
            for r in c.violation_census(*count)? {
                rows.push(vec![
                    Cell::I(r.i as i128),
                    Cell::I(r.p_im1 as i128),
                    Cell::I(r.p_i as i128),
                    Cell::I(r.p_ip1 as i128),
                    Cell::F(r.d_i),
                    Cell::B(r.violates),
                ]);
            }
            rows.emit(out)
        }
        Command::Compare { from, to, step } => {
            let t = cli.table()?;
            let f = Facade64::new(&t, cli.backend())?;
            Table::from(analysis::comparison(&f, *from, *to, *step)?).emit(out)
        }
        Command::Variance { kind, x0, eps, step } => {
            let t = cli.table()?;
            let f = Facade64::new(&t, cli.backend())?;
            let kind = match kind {
                Kind::A => VarianceKind::A,
                Kind::B => VarianceKind::B,
            };
            let w = match eps {
                Some(e) => VarianceWindow::new(*x0, *e, kind)?,
                None => VarianceWindow::with_default_eps(*x0, kind)?,
            };
            let series = variance_series(&f, &w, *step)?;
            let mut rows = Table::new(&["x", "variance"]);
            for &(x, v) in &series {
                rows.push(vec![Cell::F(x), Cell::F(v)]);
            }
            rows.emit(out)?;
            if out == Output::Human {
                let values: Vec<f64> = series.iter().map(|s| s.1).collect();
                println!("peaks: {}", count_peaks(&values));
            }
            Ok(())
        }
        Command::Figures { which, out: dir } => {
            let t = cli.table()?;
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let list: Vec<usize> = match which {
                Some(k) => vec![*k as usize],
                None => (1..=analysis::FIGURES).collect(),
            };
            for k in list {
                let d = analysis::figure(&t, k)?;
                let path = dir.join(format!("{}.csv", d.name));
                let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                Table::from(d).write_csv(file)?;
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Solve { config, seed } => {
            let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
            let mut problem: ProblemConfig =
                serde_json::from_str(&text).map_err(|e| usage(format!("malformed config {}: {e}", config.display())))?;
            if seed.is_some() {
                problem.seed = *seed;
            }
            let sys = problem.system()?;
            let t = cli.table()?;
            let f = Facade64::new(&t, cli.backend())?;
            let penalized = build_penalty(sys, problem.penalty, Some(f))?;
            let run = solve_all(&penalized, &problem.rgn_config())?;
            let mut stdout = io::stdout().lock();
            if out != Output::Json {
                write_found(&mut stdout, &run)?;
            }
            serde_json::to_writer_pretty(&mut stdout, &run)?;
            writeln!(stdout)?;
            Ok(())
        }
    }
}

fn guess(g: Guess) -> InitialGuess {
    match g {
        Guess::Li => InitialGuess::Li,
        Guess::Xlnx => InitialGuess::XOverLnX,
        Guess::R => InitialGuess::RiemannR,
    }
}

fn func_name(f: Func) -> &'static str {
    match f {
        Func::P => "p",
        Func::Dp => "dp",
        Func::Pinv => "pinv",
        Func::Dpinv => "dpinv",
    }
}

fn newton_trace(f: &Facade64<'_>, x: f64, cfg: &NewtonConfig64) -> Result<NewtonTrace64> {
    match f.pinv_newton(x, cfg) {
        Ok((_, tr)) => Ok(tr),
        Err(primespline::Error::NoConvergence { trace, .. }) => Ok(*trace),
        Err(e) => Err(e.into()),
    }
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return Err(usage(format!("--grid expects A:B:STEP, got {s:?}")));
    };
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| usage(format!("--grid: bad number {v:?}")));
    let (a, b, step) = (num(a)?, num(b)?, num(step)?);
    if !(step > 0.0) || !(a <= b) || !a.is_finite() || !b.is_finite() {
        return Err(usage("--grid needs A <= B and STEP > 0"));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| a + k as f64 * step).collect())
}

fn write_found<W: Write>(w: &mut W, run: &SolveRun) -> Result<()> {
    writeln!(w, "FOUND SOLUTIONS ({}, {} rounds{})", run.found.len(), run.rounds, if run.exhausted { ", exhausted" } else { "" })?;
    for (k, s) in run.found.iter().enumerate() {
        let tuple: Vec<String> = s.tuple.iter().map(i64::to_string).collect();
        let x: Vec<String> = s.x.iter().map(|v| format!("{v:.9}")).collect();
        writeln!(w, "  {:>3}  ({})  x = [{}]  |f - y| = {:.3e}", k + 1, tuple.join(", "), x.join(", "), s.residual_norm)?;
    }
    writeln!(w)?;
    Ok(())
}

#[derive(Debug, Clone, Copy)]
enum Cell {
    I(i128),
    F(f64),
    B(bool),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::I(v) => write!(f, "{v}"),
            Cell::F(v) => write!(f, "{v}"),
            Cell::B(v) => write!(f, "{v}"),
        }
    }
}

impl Cell {
    fn json(self) -> serde_json::Value {
        match self {
            Cell::I(v) => i64::try_from(v).map(Into::into).unwrap_or_else(|_| v.to_string().into()),
            Cell::F(v) => serde_json::Number::from_f64(v).map_or(serde_json::Value::Null, Into::into),
            Cell::B(v) => v.into(),
        }
    }
}

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl From<Dataset> for Table {
    fn from(d: Dataset) -> Self {
        Table { headers: d.headers, rows: d.rows.into_iter().map(|r| r.into_iter().map(Cell::F).collect()).collect() }
    }
}

impl Table {
    fn new(headers: &[&str]) -> Self {
        Table { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        wr.write_record(&self.headers)?;
        for r in &self.rows {
            wr.write_record(r.iter().map(Cell::to_string))?;
        }
        wr.flush()?;
        Ok(())
    }

    fn emit(&self, out: Output) -> Result<()> {
        let stdout = io::stdout().lock();
        match out {
            Output::Csv => self.write_csv(stdout),
            Output::Json => {
                let rows: Vec<serde_json::Map<String, serde_json::Value>> = self
                    .rows
                    .iter()
                    .map(|r| self.headers.iter().cloned().zip(r.iter().map(|c| c.json())).collect())
                    .collect();
                let mut stdout = stdout;
                serde_json::to_writer_pretty(&mut stdout, &rows)?;
                writeln!(stdout)?;
                Ok(())
            }
            Output::Human => {
                let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::to_string).collect()).collect();
                let widths: Vec<usize> = (0..self.headers.len())
                    .map(|c| cells.iter().map(|r| r[c].len()).chain([self.headers[c].len()]).max().unwrap_or(0))
                    .collect();
                let mut w = io::BufWriter::new(stdout);
                let line = |w: &mut io::BufWriter<_>, items: &[String]| -> io::Result<()> {
                    let padded: Vec<String> = items.iter().zip(&widths).map(|(s, n)| format!("{s:>n$}")).collect();
                    writeln!(w, "{}", padded.join("  "))
                };
                line(&mut w, &self.headers)?;
                for r in &cells {
                    line(&mut w, r)?;
                }
                w.flush()?;
                Ok(())
            }
        }
    }
}
