//! Arithmetic parabolic spline through the primes and its closed-form inverse.
//!
//! Each segment `[i - 0.5, i + 0.5]`, `i >= 2`, carries a pair of parabolas
//!
//! ```text
//! q_i^l(x) = -2 a_{i-1} (x - i)^2 + (x - i) + p(i),   i - 0.5 <= x <= i
//! q_i^r(x) =  2 a_i     (x - i)^2 + (x - i) + p(i),   i <= x <= i + 0.5
//! a_i = p(i+1) - p(i) - 1
//! ```
//!
//! with `x + 1` on `[1, 1.5]`. The derivative is `1` at every integer and
//! `2 (p(i+1) - p(i)) - 1` at every half-integer, so the spline is strictly
//! increasing and its inverse is available in closed form.

use serde::Serialize;

use crate::asymptotics::li;
use crate::error::{Error, Result};
use crate::primes::PrimeTable;
use crate::scalar::Real;

/// Left/right parabola data of segment `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadSegmentPair {
    pub i: usize,
    /// `a_{i-1}`: composites strictly between `p(i-1)` and `p(i)`.
    pub a_im1: u64,
    /// `a_i`: composites strictly between `p(i)` and `p(i+1)`.
    pub a_i: u64,
    pub p_i: u64,
}

impl QuadSegmentPair {
    pub fn left<T: Real>(&self, x: T) -> T {
        let u = x - T::int(self.i as u64);
        -T::lit(2.0) * T::int(self.a_im1) * u * u + u + T::int(self.p_i)
    }

    pub fn right<T: Real>(&self, x: T) -> T {
        let u = x - T::int(self.i as u64);
        T::lit(2.0) * T::int(self.a_i) * u * u + u + T::int(self.p_i)
    }

    pub fn left_deriv<T: Real>(&self, x: T) -> T {
        T::lit(4.0) * T::int(self.a_im1) * (T::int(self.i as u64) - x) + T::one()
    }

    pub fn right_deriv<T: Real>(&self, x: T) -> T {
        T::lit(4.0) * T::int(self.a_i) * (x - T::int(self.i as u64)) + T::one()
    }

    pub fn eval<T: Real>(&self, x: T) -> T {
        if x <= T::int(self.i as u64) {
            self.left(x)
        } else {
            self.right(x)
        }
    }

    pub fn deriv<T: Real>(&self, x: T) -> T {
        if x <= T::int(self.i as u64) {
            self.left_deriv(x)
        } else {
            self.right_deriv(x)
        }
    }

    /// Integer monomial coefficients of both parabolas.
    pub fn coeff_row(&self) -> QuadCoeffRow {
        let i = self.i as i128;
        let (al, ar, p) = (self.a_im1 as i128, self.a_i as i128, self.p_i as i128);
        let (alpha_l, beta_l, gamma_l) = (-2 * al, 4 * i * al + 1, -2 * i * i * al + p - i);
        let (alpha_r, beta_r, gamma_r) = (2 * ar, -4 * i * ar + 1, 2 * i * i * ar + p - i);
        QuadCoeffRow {
            i: self.i,
            p_i: self.p_i,
            alpha_l,
            beta_l,
            gamma_l,
            d_l: beta_l * beta_l - 4 * alpha_l * gamma_l,
            alpha_r,
            beta_r,
            gamma_r,
            d_r: beta_r * beta_r - 4 * alpha_r * gamma_r,
        }
    }
}

/// One row of the coefficient table: `q_i^l = alpha_l x^2 + beta_l x + gamma_l`,
/// likewise for `q_i^r`, and the discriminants `d = beta^2 - 4 alpha gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadCoeffRow {
    pub i: usize,
    pub p_i: u64,
    pub alpha_l: i128,
    pub beta_l: i128,
    pub gamma_l: i128,
    pub d_l: i128,
    pub alpha_r: i128,
    pub beta_r: i128,
    pub gamma_r: i128,
    pub d_r: i128,
}

impl QuadCoeffRow {
    pub fn eval_left(&self, x: f64) -> f64 {
        (self.alpha_l as f64 * x + self.beta_l as f64) * x + self.gamma_l as f64
    }

    pub fn eval_right(&self, x: f64) -> f64 {
        (self.alpha_r as f64 * x + self.beta_r as f64) * x + self.gamma_r as f64
    }
}

/// Piece `t_i` of the inverse spline, covering
/// `[(p(i-1) + p(i)) / 2, (p(i) + p(i+1)) / 2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InverseSegment {
    pub i: usize,
    pub a_im1: u64,
    pub a_i: u64,
    pub p_i: u64,
    /// `p(i-1) + p(i)`, twice the lower end.
    pub lo_twice: u64,
    /// `p(i) + p(i+1)`, twice the upper end.
    pub hi_twice: u64,
}

impl InverseSegment {
    pub fn lo<T: Real>(&self) -> T {
        T::int(self.lo_twice) / T::lit(2.0)
    }

    pub fn hi<T: Real>(&self) -> T {
        T::int(self.hi_twice) / T::lit(2.0)
    }

    /// `b_i^l = 8 a_{i-1} (p(i) - x) + 1` left of `p(i)`, `b_i^r = 8 a_i (x - p(i)) + 1` right of it.
    pub fn b<T: Real>(&self, x: T) -> T {
        let p = T::int(self.p_i);
        let a = if x < p { self.a_im1 } else { self.a_i };
        T::lit(8.0) * T::int(a) * (x - p).abs() + T::one()
    }

    /// `t_i(x)`. The textbook form `i + (sqrt(b) - 1) / (4a)` is rewritten as
    /// `i + 2 (x - p(i)) / (1 + sqrt(b))`, which is exact at `x = p(i)`, has no
    /// cancellation near it, and reduces to `i + x - p(i)` when `a = 0`.
    pub fn t<T: Real>(&self, x: T) -> T {
        let b = self.b(x);
        T::int(self.i as u64) + T::lit(2.0) * (x - T::int(self.p_i)) / (T::one() + b.sqrt())
    }

    /// `dt_i/dx = b^{-1/2}`.
    pub fn dt<T: Real>(&self, x: T) -> T {
        self.b(x).sqrt().recip()
    }
}

/// The parabolic spline over a prime table.
#[derive(Debug, Clone, Copy)]
pub struct QuadSpline<'t> {
    table: &'t PrimeTable,
}

/// Upper bound on the `+-1` walk of [`QuadSpline::locate_segment`] before it
/// switches to bisection.
const LOCATE_WALK: usize = 64;

impl<'t> QuadSpline<'t> {
    pub fn new(table: &'t PrimeTable) -> Result<Self> {
        if table.len() < 3 {
            return Err(Error::domain("parabolic spline needs at least 3 primes"));
        }
        Ok(Self { table })
    }

    pub fn table(&self) -> &'t PrimeTable {
        self.table
    }

    /// Right end `N - 0.5` of the spline's abscissas.
    pub fn domain_end(&self) -> f64 {
        self.table.len() as f64 - 0.5
    }

    /// Right end `(p(N-1) + p(N)) / 2` of the inverse's abscissas.
    pub fn inverse_domain_end(&self) -> f64 {
        let n = self.table.len();
        (self.table.p(n - 1) + self.table.p(n)) as f64 / 2.0
    }

    pub fn segment(&self, i: usize) -> Result<QuadSegmentPair> {
        let hi = self.table.len() - 1;
        if i < 2 || i > hi {
            return Err(Error::IndexOutOfRange { index: i, lo: 2, hi });
        }
        Ok(self.segment_unchecked(i))
    }

    fn segment_unchecked(&self, i: usize) -> QuadSegmentPair {
        let t = self.table;
        QuadSegmentPair { i, a_im1: t.p(i) - t.p(i - 1) - 1, a_i: t.p(i + 1) - t.p(i) - 1, p_i: t.p(i) }
    }

    pub fn coeff_row(&self, i: usize) -> Result<QuadCoeffRow> {
        Ok(self.segment(i)?.coeff_row())
    }

    fn locate<T: Real>(&self, x: T) -> Result<Option<usize>> {
        if !(x >= T::one() && x <= T::lit(self.domain_end())) {
            return Err(Error::OutOfRange { x: x.as_f64(), lo: 1.0, hi: self.domain_end() });
        }
        let i = (x - T::lit(0.5)).ceil().to_usize().unwrap_or(0);
        Ok((i >= 2).then_some(i))
    }

    /// `S_quad(x)` on `[1, N - 0.5]`.
    pub fn eval<T: Real>(&self, x: T) -> Result<T> {
        Ok(match self.locate(x)? {
            None => x + T::one(),
            Some(i) => self.segment_unchecked(i).eval(x),
        })
    }

    pub fn deriv<T: Real>(&self, x: T) -> Result<T> {
        Ok(match self.locate(x)? {
            None => T::one(),
            Some(i) => self.segment_unchecked(i).deriv(x),
        })
    }

    fn inverse_segment(&self, i: usize) -> InverseSegment {
        let t = self.table;
        let (l, m, r) = (t.p(i - 1), t.p(i), t.p(i + 1));
        InverseSegment { i, a_im1: m - l - 1, a_i: r - m - 1, p_i: m, lo_twice: l + m, hi_twice: m + r }
    }

    /// Segment `i` of the inverse whose interval contains `x >= 2.5`.
    ///
    /// Starts at `floor(li(x))` and walks one index at a time, so it does not
    /// rely on the sign of `li(x) - pi(x)`; falls back to bisection when the
    /// walk is long.
    pub fn locate_segment<T: Real>(&self, x: T) -> Result<InverseSegment> {
        let n = self.table.len();
        let hi_end = self.inverse_domain_end();
        if !(x >= T::lit(2.5) && x <= T::lit(hi_end)) {
            return Err(Error::OutOfRange { x: x.as_f64(), lo: 2.5, hi: hi_end });
        }
        let twice = x * T::lit(2.0);
        let below = |i: usize| twice < T::int(self.table.p(i - 1) + self.table.p(i));
        let above = |i: usize| twice > T::int(self.table.p(i) + self.table.p(i + 1));
        let guess = li(x)?.floor().to_usize().unwrap_or(2);
        let mut i = guess.clamp(2, n - 1);
        for _ in 0..LOCATE_WALK {
            if below(i) {
                i -= 1;
            } else if above(i) {
                i += 1;
            } else {
                return Ok(self.inverse_segment(i));
            }
        }
        // first i in 2..=n-1 whose upper end reaches x
        let (mut lo, mut hi) = (2, n - 1);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if above(mid) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        Ok(self.inverse_segment(lo))
    }

    /// `S_quad^{-1}(x)` on `[2, (p(N-1) + p(N)) / 2]`; exactly `i` at `x = p(i)`.
    pub fn eval_inverse<T: Real>(&self, x: T) -> Result<T> {
        let hi = self.inverse_domain_end();
        if !(x >= T::lit(2.0) && x <= T::lit(hi)) {
            return Err(Error::OutOfRange { x: x.as_f64(), lo: 2.0, hi });
        }
        if x <= T::lit(2.5) {
            return Ok(x - T::one());
        }
        if x.fract().is_zero() {
            if let Some(i) = x.to_u64().and_then(|v| self.table.index_of(v)) {
                return Ok(T::int(i as u64));
            }
        }
        Ok(self.locate_segment(x)?.t(x))
    }

    pub fn eval_inverse_deriv<T: Real>(&self, x: T) -> Result<T> {
        let hi = self.inverse_domain_end();
        if !(x >= T::lit(2.0) && x <= T::lit(hi)) {
            return Err(Error::OutOfRange { x: x.as_f64(), lo: 2.0, hi });
        }
        if x <= T::lit(2.5) {
            return Ok(T::one());
        }
        Ok(self.locate_segment(x)?.dt(x))
    }
}
