//! `p(x)`, `dp(x)`, `p^{-1}(x)` and `dp^{-1}(x)` on the whole real line.
//!
//! Below `x = 1` the initial polynomial `x + 1` is continued; on
//! `[1, N - 0.5]` the selected spline is used; beyond, the asymptote sewn to
//! the spline. The inverse is the closed-form inverse spline where available
//! and an autoregularized Newton iteration elsewhere:
//!
//! ```text
//! y_{k+1} = y_k - (p(y_k) - x) / (dp(y_k) + eps_k)
//! eps_k   = (sqrt(dp(y_k)^2 + 4 N |p(y_k) - x|) - dp(y_k)) / 2
//! N       = (eps_0^2 + eps_0 dp(y_0)) / |p(y_0) - x|
//! ```

use serde::Serialize;

use crate::asymptotics::{li, riemann_r, AsymptoteSewing, DEFAULT_RELAX};
use crate::cubic::CubicSpline;
use crate::error::{Error, Result};
use crate::primes::PrimeTable;
use crate::quad::QuadSpline;
use crate::scalar::Real;

/// Spline carrying the prime function on `[1, N - 0.5]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Quad,
    Cubic,
}

/// Starting point of the Newton iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialGuess {
    #[default]
    Li,
    XOverLnX,
    RiemannR,
}

impl InitialGuess {
    pub fn at<T: Real>(self, x: T) -> Result<T> {
        match self {
            InitialGuess::Li => li(x),
            InitialGuess::XOverLnX => Ok(x / x.ln()),
            InitialGuess::RiemannR => riemann_r(x),
        }
    }
}

/// Regularizers tried in turn when an attempt fails.
pub const EPS0_LADDER: [f64; 7] = [1e-6, 1e-3, 1e-1, 1.0, 10.0, 1e2, 1e3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig<T> {
    /// First regularizer; larger rungs of [`EPS0_LADDER`] follow on failure.
    pub eps0: T,
    /// Iterations per attempt.
    pub max_iter: usize,
    /// Convergence when `|p(y) - x| <= tol_resid * max(1, x)`.
    pub tol_resid: T,
    pub y0: InitialGuess,
}

impl<T: Real> Default for NewtonConfig<T> {
    fn default() -> Self {
        Self { eps0: T::lit(EPS0_LADDER[0]), max_iter: 100, tol_resid: T::lit(1e-10), y0: InitialGuess::Li }
    }
}

impl<T: Real> NewtonConfig<T> {
    fn validate(&self) -> Result<()> {
        if !(self.eps0 > T::zero()) || !(self.tol_resid > T::zero()) || self.max_iter == 0 {
            return Err(Error::Config("Newton needs eps0 > 0, tol_resid > 0, max_iter > 0".into()));
        }
        Ok(())
    }

    fn ladder(&self) -> Vec<T> {
        let mut rungs = vec![self.eps0];
        rungs.extend(EPS0_LADDER.iter().map(|&e| T::lit(e)).filter(|&e| e > self.eps0));
        rungs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonStep<T> {
    pub y: T,
    /// `p(y) - x`
    pub residual: T,
    pub dp: T,
    pub eps: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonTrace<T> {
    /// Iterates of the last attempt, starting with `y_0`.
    pub steps: Vec<NewtonStep<T>>,
    pub eps0: T,
    /// The constant `N` of the last attempt.
    pub n_const: T,
    /// Attempts made, including the last: the ladder is climbed once with
    /// a residual-decrease guard and once without.
    pub attempts: usize,
    pub converged: bool,
}

impl<T: Real> NewtonTrace<T> {
    fn to_f64(&self) -> NewtonTrace<f64> {
        NewtonTrace {
            steps: self
                .steps
                .iter()
                .map(|s| NewtonStep { y: s.y.as_f64(), residual: s.residual.as_f64(), dp: s.dp.as_f64(), eps: s.eps.as_f64() })
                .collect(),
            eps0: self.eps0.as_f64(),
            n_const: self.n_const.as_f64(),
            attempts: self.attempts,
            converged: self.converged,
        }
    }
}

/// `(sqrt(d^2 + 4 m) - d) / 2` without cancellation, `m >= 0`.
pub(crate) fn positive_root<T: Real>(d: T, m: T) -> T {
    if m.is_zero() {
        return T::zero();
    }
    let two = T::lit(2.0);
    let disc = (d * d + T::lit(4.0) * m).sqrt();
    if d >= T::zero() {
        two * m / (disc + d)
    } else {
        (disc - d) / two
    }
}

/// The prime function over one table and backend.
#[derive(Debug, Clone, Copy)]
pub struct Facade<'t, T> {
    table: &'t PrimeTable,
    backend: Backend,
    sewing: AsymptoteSewing<T>,
}

impl<'t, T: Real> Facade<'t, T> {
    /// Sews the asymptote to the chosen spline with the default relaxation.
    pub fn new(table: &'t PrimeTable, backend: Backend) -> Result<Self> {
        let sewing = match backend {
            Backend::Quad => AsymptoteSewing::new(table)?,
            Backend::Cubic => {
                if table.len() < 4 {
                    return Err(Error::domain("sewing needs at least 4 primes"));
                }
                let c = CubicSpline::new(table)?;
                let s = T::lit(c.domain_end());
                AsymptoteSewing::fit(table.len() - 1, s, c.eval(s)?, c.deriv(s)?, T::lit(DEFAULT_RELAX))?
            }
        };
        Ok(Self { table, backend, sewing })
    }

    pub fn with_sewing(table: &'t PrimeTable, backend: Backend, sewing: AsymptoteSewing<T>) -> Self {
        Self { table, backend, sewing }
    }

    pub fn table(&self) -> &'t PrimeTable {
        self.table
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn sewing(&self) -> &AsymptoteSewing<T> {
        &self.sewing
    }

    /// Value `(p(N-1) + p(N)) / 2` of the prime function at the sewing point.
    pub fn sew_value(&self) -> T {
        let n = self.table.len();
        T::int(self.table.as_slice()[n - 2] + self.table.as_slice()[n - 1]) / T::lit(2.0)
    }

    fn quad(&self) -> QuadSpline<'t> {
        QuadSpline::new(self.table).expect("table length checked by sewing")
    }

    fn spline_eval(&self, x: T) -> T {
        let v = match self.backend {
            Backend::Quad => self.quad().eval(x),
            Backend::Cubic => CubicSpline::new(self.table).and_then(|c| c.eval(x)),
        };
        v.expect("x within spline range")
    }

    fn spline_deriv(&self, x: T) -> T {
        let v = match self.backend {
            Backend::Quad => self.quad().deriv(x),
            Backend::Cubic => CubicSpline::new(self.table).and_then(|c| c.deriv(x)),
        };
        v.expect("x within spline range")
    }

    /// `p(x)` for every finite `x`.
    pub fn p_of(&self, x: T) -> T {
        if x < T::one() {
            x + T::one()
        } else if x <= self.sewing.sew_x {
            self.spline_eval(x)
        } else {
            self.sewing.eval(x).expect("sew point is beyond e")
        }
    }

    pub fn dp_of(&self, x: T) -> T {
        if x < T::one() {
            T::one()
        } else if x <= self.sewing.sew_x {
            self.spline_deriv(x)
        } else {
            self.sewing.deriv(x).expect("sew point is beyond e")
        }
    }

    /// `p^{-1}(x)`. Closed form on the parabolic spline's range, Newton above
    /// it (and everywhere for the cubic backend); `x - 1` below 2.
    pub fn pinv_of(&self, x: T) -> Result<T> {
        if x < T::lit(2.0) {
            return Ok(x - T::one());
        }
        if self.backend == Backend::Quad && x <= self.sew_value() {
            return self.quad().eval_inverse(x);
        }
        self.pinv_newton(x, &NewtonConfig::default()).map(|(y, _)| y)
    }

    /// Derivative of [`Facade::pinv_of`].
    pub fn dpinv_of(&self, x: T) -> Result<T> {
        if x < T::lit(2.0) {
            return Ok(T::one());
        }
        if self.backend == Backend::Quad && x <= self.sew_value() {
            return self.quad().eval_inverse_deriv(x);
        }
        let y = self.pinv_of(x)?;
        Ok(self.dp_of(y).recip())
    }

    /// `(p^{-1}(x), dp^{-1}(x))` sharing one segment search.
    pub fn pinv_pair(&self, x: T) -> Result<(T, T)> {
        if x < T::lit(2.0) {
            return Ok((x - T::one(), T::one()));
        }
        if self.backend == Backend::Quad && x <= self.sew_value() {
            if x <= T::lit(2.5) {
                return Ok((x - T::one(), T::one()));
            }
            let seg = self.quad().locate_segment(x)?;
            return Ok((seg.t(x), seg.dt(x)));
        }
        let y = self.pinv_of(x)?;
        Ok((y, self.dp_of(y).recip()))
    }

    /// Autoregularized Newton inversion starting from `cfg.y0`.
    pub fn pinv_newton(&self, x: T, cfg: &NewtonConfig<T>) -> Result<(T, NewtonTrace<T>)> {
        if !(x >= T::lit(2.0)) {
            return Err(Error::domain(format!("p^-1 needs x >= 2, got {}", x.as_f64())));
        }
        let y0 = cfg.y0.at(x)?;
        self.pinv_newton_from(x, y0, cfg)
    }

    /// Autoregularized Newton inversion from an explicit starting point.
    pub fn pinv_newton_from(&self, x: T, y0: T, cfg: &NewtonConfig<T>) -> Result<(T, NewtonTrace<T>)> {
        cfg.validate()?;
        let tol = cfg.tol_resid * x.abs().max(T::one());
        let mut last = None;
        let mut attempts = 0;
        // first pass insists on a shrinking residual, the second runs plain
        for guarded in [true, false] {
            for eps0 in cfg.ladder() {
                let mut trace = self.newton_attempt(x, y0, eps0, cfg.max_iter, tol, guarded);
                attempts += 1;
                trace.attempts = attempts;
                if trace.converged {
                    let y = trace.steps.last().expect("at least y0").y;
                    return Ok((y, trace));
                }
                last = Some(trace);
            }
        }
        let trace = last.expect("ladder is non-empty");
        Err(Error::NoConvergence { x: x.as_f64(), trace: Box::new(trace.to_f64()) })
    }

    fn newton_attempt(&self, x: T, y0: T, eps0: T, max_iter: usize, tol: T, guarded: bool) -> NewtonTrace<T> {
        let mut y = y0;
        let mut r = self.p_of(y) - x;
        let mut dp = self.dp_of(y);
        let mut trace = NewtonTrace { steps: Vec::new(), eps0, n_const: T::zero(), attempts: 0, converged: false };
        if r.is_zero() {
            trace.steps.push(NewtonStep { y, residual: r, dp, eps: T::zero() });
            trace.converged = true;
            return trace;
        }
        let n_const = (eps0 * eps0 + eps0 * dp) / r.abs();
        trace.n_const = n_const;
        for _ in 0..=max_iter {
            let eps = positive_root(dp, n_const * r.abs());
            trace.steps.push(NewtonStep { y, residual: r, dp, eps });
            if r.abs() <= tol {
                trace.converged = true;
                return trace;
            }
            let denom = dp + eps;
            if !(denom.abs() >= T::lit(1e-300).max(T::min_positive_value())) || !denom.is_finite() {
                return trace;
            }
            y = y - r / denom;
            let r_next = self.p_of(y) - x;
            // a residual that fails to shrink hands over to the next rung
            if !r_next.is_finite() || (guarded && r_next.abs() >= r.abs()) {
                return trace;
            }
            r = r_next;
            dp = self.dp_of(y);
        }
        trace
    }
}
