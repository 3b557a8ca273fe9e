//! Diagnostics built on the facade: the prime counting function, local
//! variance functions and the tabulated data behind the standard plots.
//!
//! ```text
//! A(x) = p(x) - p~(x) - (p(x0) - p~(x0))
//! B(x) = p^{-1}(x) - R(x) - (p^{-1}(x0) - R(x0))
//! ```

use serde::Serialize;

use crate::asymptotics::{asymptote, li, riemann_r};
use crate::error::{Error, Result};
use crate::inversion::{Backend, Facade, NewtonConfig};
use crate::primes::PrimeTable;

/// `pi(x) = floor(p^{-1}(x))`.
pub fn pi_floor(facade: &Facade<'_, f64>, x: f64) -> Result<u64> {
    if !(x >= 2.0) {
        return Err(Error::domain(format!("pi(x) needs x >= 2, got {x}")));
    }
    Ok(facade.pinv_of(x)?.floor() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VarianceKind {
    /// Over index space: `p(x)` against the asymptote.
    A,
    /// Over prime-value space: `p^{-1}(x)` against `R(x)`.
    B,
}

/// Half-open window `[x0, x0 + eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceWindow {
    pub x0: f64,
    pub eps: f64,
    pub kind: VarianceKind,
}

impl VarianceWindow {
    pub fn new(x0: f64, eps: f64, kind: VarianceKind) -> Result<Self> {
        if !(eps > 0.0) || !x0.is_finite() || !eps.is_finite() {
            return Err(Error::domain("window length must be positive and finite"));
        }
        let lowest = match kind {
            VarianceKind::A => std::f64::consts::E,
            VarianceKind::B => 2.0,
        };
        if !(x0 > lowest) {
            return Err(Error::domain(format!("window must start above {lowest}")));
        }
        Ok(Self { x0, eps, kind })
    }

    /// Window of length `0.25 x0`.
    pub fn with_default_eps(x0: f64, kind: VarianceKind) -> Result<Self> {
        Self::new(x0, 0.25 * x0, kind)
    }

    pub fn end(&self) -> f64 {
        self.x0 + self.eps
    }

    pub fn contains(&self, x: f64) -> bool {
        self.x0 <= x && x < self.end()
    }

    /// `x0 + k step` for every such point inside the window.
    pub fn grid(&self, step: f64) -> Result<Vec<f64>> {
        if !(step > 0.0) {
            return Err(Error::domain("grid step must be positive"));
        }
        let n = (self.eps / step).ceil() as usize;
        Ok((0..=n).map(|k| self.x0 + k as f64 * step).filter(|&x| self.contains(x)).collect())
    }
}

fn raw_a(facade: &Facade<'_, f64>, x: f64) -> Result<f64> {
    Ok(facade.p_of(x) - asymptote(x)?)
}

fn raw_b(facade: &Facade<'_, f64>, x: f64) -> Result<f64> {
    Ok(facade.pinv_of(x)? - riemann_r(x)?)
}

fn check(window: &VarianceWindow, x: f64) -> Result<()> {
    if window.contains(x) {
        Ok(())
    } else {
        Err(Error::OutOfRange { x, lo: window.x0, hi: window.end() })
    }
}

pub fn variance_a(facade: &Facade<'_, f64>, window: &VarianceWindow, x: f64) -> Result<f64> {
    check(window, x)?;
    Ok(raw_a(facade, x)? - raw_a(facade, window.x0)?)
}

pub fn variance_b(facade: &Facade<'_, f64>, window: &VarianceWindow, x: f64) -> Result<f64> {
    check(window, x)?;
    Ok(raw_b(facade, x)? - raw_b(facade, window.x0)?)
}

/// The window's variance function on `window.grid(step)`.
pub fn variance_series(facade: &Facade<'_, f64>, window: &VarianceWindow, step: f64) -> Result<Vec<(f64, f64)>> {
    let raw = |x| match window.kind {
        VarianceKind::A => raw_a(facade, x),
        VarianceKind::B => raw_b(facade, x),
    };
    let origin = raw(window.x0)?;
    window.grid(step)?.into_iter().map(|x| Ok((x, raw(x)? - origin))).collect()
}

/// Strict interior local maxima after merging runs of equal values.
pub fn count_peaks(values: &[f64]) -> usize {
    let mut merged: Vec<f64> = Vec::with_capacity(values.len());
    for &v in values {
        if merged.last() != Some(&v) {
            merged.push(v);
        }
    }
    merged.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count()
}

/// A named table of numbers with column headers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Dataset {
    fn new(name: &str, headers: &[&str]) -> Self {
        Self { name: name.into(), headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }
}

fn grid(a: f64, b: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(a <= b) {
        return Err(Error::domain("grid needs a <= b and a positive step"));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| a + k as f64 * step).collect())
}

/// Rows `x, pi(x), p^{-1}(x), li(x), R(x)` on `[from, to]`; `pi` from the
/// table itself.
pub fn comparison(facade: &Facade<'_, f64>, from: f64, to: f64, step: f64) -> Result<Dataset> {
    if !(from >= 2.0) {
        return Err(Error::domain("comparison starts at x >= 2"));
    }
    let mut d = Dataset::new("comparison", &["x", "pi", "pinv", "li", "R"]);
    for x in grid(from, to, step)? {
        let pi = facade.table().count_upto(x)? as f64;
        d.rows.push(vec![x, pi, facade.pinv_of(x)?, li(x)?, riemann_r(x)?]);
    }
    Ok(d)
}

/// Number of the standard plots.
pub const FIGURES: usize = 9;

/// Index window of plots 1 and 2; it holds a triplet where the cubic spline
/// loses monotonicity.
pub const SPLINE_WINDOW: (f64, f64) = (428.0, 432.0);

/// Index window whose image is the prime window `[900, 1000]`.
pub const INDEX_WINDOW: (f64, f64) = (154.78, 168.2);

/// Data behind plot `which` (1 through 9).
///
/// `table` must hold at least 6000 primes; plot 4 sews at the 6000th.
pub fn figure(table: &PrimeTable, which: usize) -> Result<Dataset> {
    if table.len() < 6000 {
        return Err(Error::domain("plots need a table of at least 6000 primes"));
    }
    let quad = Facade::<f64>::new(table, Backend::Quad)?;
    let cubic = Facade::<f64>::new(table, Backend::Cubic)?;
    let (a, b) = SPLINE_WINDOW;
    match which {
        1 | 2 => {
            let (name, hs, f): (_, _, fn(&Facade<'_, f64>, f64) -> f64) = if which == 1 {
                ("figure1", ["x", "cubic", "quad"], |f, x| f.p_of(x))
            } else {
                ("figure2", ["x", "cubic_deriv", "quad_deriv"], |f, x| f.dp_of(x))
            };
            let mut d = Dataset::new(name, &hs);
            for x in grid(a, b, 1e-3)? {
                d.rows.push(vec![x, f(&cubic, x), f(&quad, x)]);
            }
            Ok(d)
        }
        3 => {
            let mut d = Dataset::new("figure3", &["x", "cubic_inverse", "quad_inverse"]);
            let (lo, hi) = (table.prime_at(a as usize)? as f64, table.prime_at(b as usize)? as f64);
            let cfg = NewtonConfig::default();
            for x in grid(lo, hi, 1e-2)? {
                let (yc, _) = cubic.pinv_newton_from(x, quad.pinv_of(x)?, &cfg)?;
                d.rows.push(vec![x, yc, quad.pinv_of(x)?]);
            }
            Ok(d)
        }
        4 => {
            let t = table.first(6000)?;
            let f = Facade::<f64>::new(&t, Backend::Quad)?;
            let s = f.sewing().sew_x;
            let mut d = Dataset::new("figure4", &["x", "p", "dp", "asymptote"]);
            for x in grid(s - 10.0, s + 10.0, 1e-2)? {
                d.rows.push(vec![x, f.p_of(x), f.dp_of(x), asymptote(x)?]);
            }
            Ok(d)
        }
        5 => {
            let mut d = comparison(&quad, 2.0, 1000.0, 0.5)?;
            d.name = "figure5".into();
            Ok(d)
        }
        6 => {
            let mut d = Dataset::new("figure6", &["x", "p"]);
            for x in grid(INDEX_WINDOW.0, INDEX_WINDOW.1, 1e-3)? {
                d.rows.push(vec![x, quad.p_of(x)]);
            }
            Ok(d)
        }
        7..=9 => {
            let w = match which {
                7 => VarianceWindow::new(INDEX_WINDOW.0, INDEX_WINDOW.1 - INDEX_WINDOW.0, VarianceKind::A)?,
                8 => VarianceWindow::new(900.0, 100.0, VarianceKind::B)?,
                _ => VarianceWindow::new(900.0, 250.0, VarianceKind::B)?,
            };
            let header = if which == 7 { "A" } else { "B" };
            let mut d = Dataset::new(&format!("figure{which}"), &["x", header]);
            d.rows = variance_series(&quad, &w, 1e-3)?.into_iter().map(|(x, v)| vec![x, v]).collect();
            Ok(d)
        }
        _ => Err(Error::domain(format!("no plot {which}; plots are numbered 1 to {FIGURES}"))),
    }
}
