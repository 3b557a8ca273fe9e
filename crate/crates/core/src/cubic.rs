//! Cubic spline through the primes.
//!
//! On `[1, 1.5]` the spline is `x + 1`; on `[i - 0.5, i + 0.5]`, `i >= 2`, it is
//!
//! ```text
//! c_i(x) = 2 (a_i (x - i - 1/2)^2 + b_i (x - i - 1/2) + (p(i) + p(i+1)) / 2) (x - i)
//!          - 2 p(i) (x - i - 1/2)
//! a_i = (p(i+1) - p(i-1)) / 2 - 1,   b_i = p(i+1) - p(i) - 1
//! ```
//!
//! which interpolates `p(i)` at `x = i` and the prime midpoints at `x = i + 1/2`,
//! with matching first derivatives at every joint. The derivative is not
//! positive everywhere: it changes sign on a segment exactly when the
//! discriminant `d_i` of the surrounding prime triplet is non-negative.

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::primes::PrimeTable;
use crate::scalar::Real;

/// Data of the cubic piece `c_i` on `[i - 0.5, i + 0.5]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CubicSegment {
    pub i: usize,
    pub p_im1: u64,
    pub p_i: u64,
    pub p_ip1: u64,
}

impl CubicSegment {
    /// `2 a_i = p(i+1) - p(i-1) - 2`; odd only for `i = 2`.
    pub fn a_twice(&self) -> i64 {
        (self.p_ip1 - self.p_im1) as i64 - 2
    }

    pub fn b(&self) -> i64 {
        (self.p_ip1 - self.p_i) as i64 - 1
    }

    pub fn a<T: Real>(&self) -> T {
        T::lit(self.a_twice() as f64) / T::lit(2.0)
    }

    pub fn eval<T: Real>(&self, x: T) -> T {
        let two = T::lit(2.0);
        let (a, b) = (self.a::<T>(), T::lit(self.b() as f64));
        let u = x - T::int(self.i as u64) - T::lit(0.5);
        let mid = (T::int(self.p_i) + T::int(self.p_ip1)) / two;
        two * ((a * u + b) * u + mid) * (x - T::int(self.i as u64)) - two * T::int(self.p_i) * u
    }

    pub fn deriv<T: Real>(&self, x: T) -> T {
        let two = T::lit(2.0);
        let (a, b) = (self.a::<T>(), T::lit(self.b() as f64));
        let v = x - T::int(self.i as u64);
        let u = v - T::lit(0.5);
        two * (two * a * u + b) * v + two * a * u * u + two * b * u + T::int(self.p_ip1) - T::int(self.p_i)
    }

    /// Exact monomial coefficients `[delta, gamma, beta, alpha]` of
    /// `c_i(x) = alpha x^3 + beta x^2 + gamma x + delta`.
    pub fn monomial_coeffs(&self) -> [Ratio<i128>; 4] {
        let r = |n: i128| Ratio::from_integer(n);
        let half = Ratio::new(1, 2);
        let a = Ratio::new(self.a_twice() as i128, 2);
        let b = r(self.b() as i128);
        let i = r(self.i as i128);
        let s = i + half;
        let mid = Ratio::new(self.p_i as i128 + self.p_ip1 as i128, 2);
        // (x - s) and (x - i) as [constant, linear]
        let xs = [-s, r(1)];
        let xi = [-i, r(1)];
        let sq = poly_mul(&xs, &xs);
        // a (x - s)^2 + b (x - s) + mid
        let mut inner = vec![r(0); 3];
        for (k, c) in sq.iter().enumerate() {
            inner[k] += a * c;
        }
        inner[0] += b * xs[0] + mid;
        inner[1] += b * xs[1];
        let mut cubic = poly_mul(&inner, &xi);
        for c in cubic.iter_mut() {
            *c *= r(2);
        }
        let p = r(self.p_i as i128);
        cubic[0] -= r(2) * p * xs[0];
        cubic[1] -= r(2) * p * xs[1];
        [cubic[0], cubic[1], cubic[2], cubic[3]]
    }
}

fn poly_mul(a: &[Ratio<i128>], b: &[Ratio<i128>]) -> Vec<Ratio<i128>> {
    let mut out = vec![Ratio::from_integer(0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Monotonicity diagnosis of the triplet `p(i-1), p(i), p(i+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripletReport {
    pub i: usize,
    pub p_im1: u64,
    pub p_i: u64,
    pub p_ip1: u64,
    /// Discriminant `d_i`; the derivative of `c_i` is positive iff `d_i < 0`.
    pub d_i: f64,
    /// `t_i = 3 ((p(i+1) - p(i-1))^2 - 4)`.
    pub t_i: i128,
    /// Open interval that must contain `p(i)` for a positive derivative.
    pub bounds: (f64, f64),
    pub violates: bool,
}

/// `4 d_i` from the seven-term expansion, exact.
pub fn discriminant_times_four(p_im1: u64, p_i: u64, p_ip1: u64) -> i128 {
    let (l, m, r) = (p_im1 as i128, p_i as i128, p_ip1 as i128);
    16 * m * m - 16 * (l + r) * m + l * l + r * r + 14 * l * r + 12
}

/// `t_i` of the triplet bound.
pub fn triplet_t(p_im1: u64, p_ip1: u64) -> i128 {
    let span = p_ip1 as i128 - p_im1 as i128;
    3 * (span * span - 4)
}

/// True when `p(i)` is outside the open interval `(S/2 - sqrt(t)/4, S/2 + sqrt(t)/4)`,
/// `S = p(i-1) + p(i+1)`, decided as `4 (2 p(i) - S)^2 >= t` in integers.
pub fn triplet_violates(p_im1: u64, p_i: u64, p_ip1: u64) -> bool {
    let off = 2 * p_i as i128 - p_im1 as i128 - p_ip1 as i128;
    4 * off * off >= triplet_t(p_im1, p_ip1)
}

/// The cubic spline over a prime table.
#[derive(Debug, Clone, Copy)]
pub struct CubicSpline<'t> {
    table: &'t PrimeTable,
}

impl<'t> CubicSpline<'t> {
    pub fn new(table: &'t PrimeTable) -> Result<Self> {
        if table.len() < 3 {
            return Err(Error::domain("cubic spline needs at least 3 primes"));
        }
        Ok(Self { table })
    }

    pub fn table(&self) -> &'t PrimeTable {
        self.table
    }

    /// Right end `N - 0.5` of the covered abscissas.
    pub fn domain_end(&self) -> f64 {
        self.table.len() as f64 - 0.5
    }

    pub fn segment(&self, i: usize) -> Result<CubicSegment> {
        let hi = self.table.len() - 1;
        if i < 2 || i > hi {
            return Err(Error::IndexOutOfRange { index: i, lo: 2, hi });
        }
        Ok(CubicSegment {
            i,
            p_im1: self.table.p(i - 1),
            p_i: self.table.p(i),
            p_ip1: self.table.p(i + 1),
        })
    }

    /// Segment index for `x`; `None` on the initial piece. Half-integers
    /// belong to the segment on their left.
    fn locate<T: Real>(&self, x: T) -> Result<Option<usize>> {
        let end = T::lit(self.domain_end());
        if !(x >= T::one() && x <= end) {
            return Err(Error::OutOfRange { x: x.as_f64(), lo: 1.0, hi: self.domain_end() });
        }
        let i = (x - T::lit(0.5)).ceil().to_usize().unwrap_or(0);
        Ok((i >= 2).then_some(i))
    }

    pub fn eval<T: Real>(&self, x: T) -> Result<T> {
        Ok(match self.locate(x)? {
            None => x + T::one(),
            Some(i) => self.segment(i)?.eval(x),
        })
    }

    pub fn deriv<T: Real>(&self, x: T) -> Result<T> {
        Ok(match self.locate(x)? {
            None => T::one(),
            Some(i) => self.segment(i)?.deriv(x),
        })
    }

    pub fn discriminant(&self, i: usize) -> Result<TripletReport> {
        let s = self.segment(i)?;
        let t_i = triplet_t(s.p_im1, s.p_ip1);
        let centre = (s.p_im1 + s.p_ip1) as f64 / 2.0;
        let half_width = (t_i as f64).sqrt() / 4.0;
        Ok(TripletReport {
            i,
            p_im1: s.p_im1,
            p_i: s.p_i,
            p_ip1: s.p_ip1,
            d_i: discriminant_times_four(s.p_im1, s.p_i, s.p_ip1) as f64 / 4.0,
            t_i,
            bounds: (centre - half_width, centre + half_width),
            violates: triplet_violates(s.p_im1, s.p_i, s.p_ip1),
        })
    }

    /// Every violating triplet with centre index in `2..n` (i.e. `2 <= i <= n - 1`).
    pub fn violation_census(&self, n: usize) -> Result<Vec<TripletReport>> {
        if n > self.table.len() {
            return Err(Error::IndexOutOfRange { index: n, lo: 1, hi: self.table.len() });
        }
        (2..n)
            .map(|i| self.discriminant(i))
            .filter(|r| r.as_ref().map_or(true, |r| r.violates))
            .collect()
    }
}

/// Smallest even `delta2` such that the gap pattern `(delta1, delta2)` (and,
/// by symmetry, `(delta2, delta1)`) makes the discriminant non-negative for
/// this and every larger `delta2`.
///
/// Found by scanning `delta2` against the exact discriminant of the synthetic
/// triplet `(0, delta1, delta1 + delta2)`; the discriminant depends only on
/// the gaps.
pub fn pattern_threshold(delta1: u64) -> Result<u64> {
    if delta1 == 0 || delta1 % 2 == 1 || delta1 > 1_000 {
        return Err(Error::domain(format!("unsupported gap {delta1}: expected a positive even gap")));
    }
    let sign = |d2: u64| discriminant_times_four(0, delta1, delta1 + d2) >= 0;
    // leading coefficient in delta2 is positive: past the larger root the
    // sign stays non-negative. Start above the vertex 7 * delta1.
    let mut d2 = 2;
    while d2 <= 7 * delta1 || !sign(d2) {
        d2 += 2;
    }
    while d2 > 2 && sign(d2 - 2) {
        d2 -= 2;
    }
    Ok(d2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> PrimeTable {
        PrimeTable::sieve(10_000).unwrap()
    }

    #[test]
    fn interpolates_primes_and_midpoints() {
        let t = table();
        let s = CubicSpline::new(&t).unwrap();
        assert_eq!(s.eval(3.0).unwrap(), 5.0);
        assert_eq!(s.eval(2.5).unwrap(), 4.0);
        assert_eq!(s.eval(1.25).unwrap(), 2.25);
        assert_eq!(s.deriv(1.2).unwrap(), 1.0);
        for i in 2..t.len() {
            assert_eq!(s.eval(i as f64).unwrap(), t.p(i) as f64);
            let mid = (t.p(i) + t.p(i + 1)) as f64 / 2.0;
            assert!((s.eval(i as f64 + 0.5).unwrap() - mid).abs() <= 1e-9);
        }
    }

    #[test]
    fn single_precision() {
        let t = PrimeTable::sieve(100).unwrap();
        let s = CubicSpline::new(&t).unwrap();
        assert_eq!(s.eval(3.0f32).unwrap(), 5.0f32);
        assert_eq!(s.eval(2.5f32).unwrap(), 4.0f32);
    }

    #[test]
    fn out_of_range() {
        let t = PrimeTable::sieve(100).unwrap();
        let s = CubicSpline::new(&t).unwrap();
        assert!(s.eval(0.9).is_err());
        assert!(s.eval(24.6).is_err());
        assert!(s.eval(24.5).is_ok());
        assert!(s.discriminant(1).is_err());
        assert!(s.discriminant(25).is_err());
    }

    #[test]
    fn c1_at_joints() {
        let t = table();
        let s = CubicSpline::new(&t).unwrap();
        // initial piece joins c_2 at 1.5
        let c2 = s.segment(2).unwrap();
        assert!((c2.eval(1.5) - 2.5f64).abs() < 1e-12);
        assert!((c2.deriv(1.5) - 1.0f64).abs() < 1e-12);
        for i in 2..t.len() - 1 {
            let (l, r) = (s.segment(i).unwrap(), s.segment(i + 1).unwrap());
            let x = i as f64 + 0.5;
            assert!((l.eval(x) - r.eval(x)).abs() <= 1e-9 * l.eval(x).abs());
            let (dl, dr) = (l.deriv(x), r.deriv(x));
            assert!((dl - dr).abs() <= 1e-9 * dl.abs().max(1.0), "i={i}: {dl} vs {dr}");
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let t = table();
        let s = CubicSpline::new(&t).unwrap();
        let h = 1e-5f64;
        let fd = (s.eval(3.0 + h).unwrap() - s.eval(3.0 - h).unwrap()) / (2.0 * h);
        let d = s.deriv(3.0).unwrap();
        assert!((fd - d).abs() <= 1e-6 * d.abs());
    }

    #[test]
    fn discriminant_examples() {
        let t = table();
        let s = CubicSpline::new(&t).unwrap();
        // (3, 5, 7): 4*25 - 4*10*5 + 9/4 + 49/4 + 7/2*21 + 3
        let r = s.discriminant(3).unwrap();
        assert_eq!(r.d_i, -9.0);
        assert!(!r.violates);
        assert_eq!(r.t_i, 36);
        assert_eq!(r.bounds, (3.5, 6.5));
        let r = s.discriminant(2).unwrap();
        assert_eq!(r.t_i, 15);
        assert!(!r.violates);
        let i = t.index_of(2971).unwrap();
        assert!(s.discriminant(i).unwrap().violates);
    }

    #[test]
    fn bound_form_equals_seven_term_form() {
        let t = table();
        for i in 2..t.len() {
            let (l, m, r) = (t.p(i - 1), t.p(i), t.p(i + 1));
            let off = 2 * m as i128 - l as i128 - r as i128;
            assert_eq!(discriminant_times_four(l, m, r), 4 * off * off - triplet_t(l, r));
        }
    }

    #[test]
    fn small_censuses_are_empty() {
        let t = table();
        let s = CubicSpline::new(&t).unwrap();
        assert!(s.violation_census(3).unwrap().is_empty());
        assert!(s.violation_census(100).unwrap().is_empty());
    }

    #[test]
    fn census_first_thousand() {
        let t = table();
        let s = CubicSpline::new(&t).unwrap();
        let got: Vec<_> = s
            .violation_census(1000)
            .unwrap()
            .iter()
            .map(|r| (r.p_im1, r.p_i, r.p_ip1))
            .collect();
        assert_eq!(
            got,
            vec![
                (2969, 2971, 2999),
                (2971, 2999, 3001),
                (3271, 3299, 3301),
                (6917, 6947, 6949),
                (7757, 7759, 7789)
            ]
        );
    }

    #[test]
    fn thresholds() {
        assert_eq!(pattern_threshold(2).unwrap(), 28);
        assert_eq!(pattern_threshold(4).unwrap(), 56);
        assert_eq!(pattern_threshold(6).unwrap(), 84);
        // Delta1^2 - 14 Delta1 Delta2 + Delta2^2 + 12 >= 0 has larger root
        // 56 + sqrt(3060) = 111.3 for Delta1 = 8.
        assert_eq!(pattern_threshold(8).unwrap(), 112);
        assert!(pattern_threshold(3).is_err());
        assert!(pattern_threshold(0).is_err());
    }

    #[test]
    fn twenty_eight_is_inclusive() {
        // gap 2 then 28: 2969 -> 2971 -> 2999
        assert!(triplet_violates(2969, 2971, 2999));
        assert!(!triplet_violates(0, 2, 28));
        assert!(triplet_violates(0, 2, 30));
    }

    #[test]
    fn almost_arithmetic_coefficients() {
        let t = table();
        let s = CubicSpline::new(&t).unwrap();
        // p(1) = 2 makes a_2 = 1/2 and pushes quarters into segment 2
        let c2 = s.segment(2).unwrap().monomial_coeffs();
        assert_eq!(c2, [Ratio::new(-7, 2), Ratio::new(37, 4), Ratio::from_integer(-5), Ratio::from_integer(1)]);
        let mut saw_half = false;
        for i in 3..1000 {
            let seg = s.segment(i).unwrap();
            let c = seg.monomial_coeffs();
            for k in &c {
                assert!((k * Ratio::from_integer(2)).is_integer(), "i={i}");
            }
            saw_half |= !c[0].is_integer() || !c[1].is_integer();
            for x in [i as f64 - 0.3, i as f64 + 0.1, i as f64 + 0.4] {
                let f = |r: Ratio<i128>| *r.numer() as f64 / *r.denom() as f64;
                let expanded = ((f(c[3]) * x + f(c[2])) * x + f(c[1])) * x + f(c[0]);
                assert!((expanded - seg.eval(x)).abs() <= 1e-6 * seg.eval(x).abs());
            }
        }
        assert!(saw_half);
    }

    #[test]
    fn sign_law_by_sampling() {
        let t = table();
        let s = CubicSpline::new(&t).unwrap();
        for i in 2..1000 {
            let seg = s.segment(i).unwrap();
            let positive = (0..=1000).all(|k| seg.deriv(i as f64 - 0.5 + k as f64 * 1e-3) > 0.0);
            assert_eq!(positive, !s.discriminant(i).unwrap().violates, "i={i}");
        }
    }
}
