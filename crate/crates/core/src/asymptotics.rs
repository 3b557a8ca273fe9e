//! Asymptotic continuation of the prime function, the logarithmic integral,
//! the Moebius function and Riemann's `R(x)`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::primes::PrimeTable;
use crate::quad::QuadSpline;
use crate::quadrature::integrate;
use crate::scalar::Real;

fn logs<T: Real>(x: T) -> Result<(T, T)> {
    if !(x > T::E()) {
        return Err(Error::domain(format!("asymptote needs x > e, got {}", x.as_f64())));
    }
    let l = x.ln();
    Ok((l, l.ln()))
}

/// `g` with `p~(x) = x g(ln x)`.
fn bracket<T: Real>(l: T, ll: T) -> T {
    let half = T::lit(0.5);
    l + ll + (ll - T::lit(2.0)) / l - (ll * ll * half - T::lit(3.0) * ll + T::lit(5.5)) / (l * l) - T::one()
}

/// Asymptotic `n`-th prime,
/// `x (ln x + ln ln x + (ln ln x - 2)/ln x - ((ln ln x)^2/2 - 3 ln ln x + 5.5)/(ln x)^2 - 1)`.
pub fn asymptote<T: Real>(x: T) -> Result<T> {
    let (l, ll) = logs(x)?;
    Ok(x * bracket(l, ll))
}

/// Analytic derivative of [`asymptote`]: `g + dg/dL` with `L = ln x`.
pub fn asymptote_deriv<T: Real>(x: T) -> Result<T> {
    let (l, ll) = logs(x)?;
    let dg = T::one()
        + l.recip()
        + (T::lit(3.0) - ll) / (l * l)
        + (ll * ll - T::lit(7.0) * ll + T::lit(14.0)) / (l * l * l);
    Ok(bracket(l, ll) + dg)
}

/// Absolute tolerance for [`li`].
pub const LI_TOL: f64 = 1e-10;

/// Offset logarithmic integral `li(x) = int_2^x dt / ln t`, so `li(2) = 0`.
///
/// Integrated in `u = ln t`, where the integrand is `e^u / u`.
pub fn li<T: Real>(x: T) -> Result<T> {
    let two = T::lit(2.0);
    if !(x >= two) {
        return Err(Error::domain(format!("li needs x >= 2, got {}", x.as_f64())));
    }
    if x == two {
        return Ok(T::zero());
    }
    Ok(integrate(|u: T| u.exp() / u, T::LN_2(), x.ln(), T::lit(LI_TOL)))
}

/// Moebius function tabulated on `1..=n_max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MobiusCache {
    mu: Vec<i8>,
}

impl MobiusCache {
    pub fn new(n_max: usize) -> Self {
        let n_max = n_max.max(1);
        let mut mu = vec![1i8; n_max + 1];
        mu[0] = 0;
        let mut is_composite = vec![false; n_max + 1];
        for p in 2..=n_max {
            if is_composite[p] {
                continue;
            }
            for m in (p..=n_max).step_by(p) {
                if m > p {
                    is_composite[m] = true;
                }
                mu[m] = -mu[m];
            }
            if let Some(sq) = p.checked_mul(p) {
                for m in (sq..=n_max).step_by(sq) {
                    mu[m] = 0;
                }
            }
        }
        Self { mu }
    }

    pub fn n_max(&self) -> usize {
        self.mu.len() - 1
    }

    /// `mu(n)` for `1 <= n <= n_max`.
    pub fn get(&self, n: usize) -> i8 {
        assert!(n >= 1 && n <= self.n_max(), "mobius index {n} outside 1..={}", self.n_max());
        self.mu[n]
    }
}

fn shared_mobius() -> &'static MobiusCache {
    static CACHE: OnceLock<MobiusCache> = OnceLock::new();
    // x^(1/n) >= 2 needs n <= log2(x); 1100 covers the whole f64 range
    CACHE.get_or_init(|| MobiusCache::new(1100))
}

/// `R(x) = sum_n mu(n)/n li(x^(1/n))`, truncated after the last `n` with
/// `x^(1/n) >= 2` (later terms vanish with the offset `li`).
pub fn riemann_r<T: Real>(x: T) -> Result<T> {
    riemann_r_with(x, shared_mobius())
}

pub fn riemann_r_with<T: Real>(x: T, mobius: &MobiusCache) -> Result<T> {
    let two = T::lit(2.0);
    if !(x >= two) {
        return Err(Error::domain(format!("R needs x >= 2, got {}", x.as_f64())));
    }
    let lnx = x.ln();
    let mut sum = T::zero();
    let mut n = 1usize;
    loop {
        let root = if n == 1 { x } else { (lnx / T::int(n as u64)).exp() };
        if root < two {
            break;
        }
        if n > mobius.n_max() {
            return Err(Error::domain("Moebius cache too small for R(x)"));
        }
        let mu = mobius.get(n);
        if mu != 0 {
            sum = sum + T::lit(mu as f64) / T::int(n as u64) * li(root)?;
        }
        n += 1;
    }
    Ok(sum)
}

/// `C^1` join of the spline with the asymptote at the last external sewing
/// point `sew_x = N - 0.5`.
///
/// Beyond `sew_x` the prime function is
/// `p~(x) + c0 + c1 r (1 - exp(-(x - sew_x) / r))`: the value offset `c0` and
/// slope offset `c1` make value and derivative agree with the spline at
/// `sew_x`; the slope offset relaxes over the length `r`, so the corrected
/// curve keeps the asymptote's slope far out and stays increasing. An
/// infinite `r` gives the plain affine correction `c0 + c1 (x - sew_x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoteSewing<T> {
    pub sew_index: usize,
    pub sew_x: T,
    pub c0: T,
    pub c1: T,
    pub relax: T,
}

/// Default relaxation length of the slope correction, in index units.
pub const DEFAULT_RELAX: f64 = 1.0;

impl<T: Real> AsymptoteSewing<T> {
    pub fn new(table: &PrimeTable) -> Result<Self> {
        Self::with_relax(table, T::lit(DEFAULT_RELAX))
    }

    /// `relax` must be positive; `T::infinity()` selects the affine correction.
    pub fn with_relax(table: &PrimeTable, relax: T) -> Result<Self> {
        if table.len() < 4 {
            return Err(Error::domain("sewing needs at least 4 primes"));
        }
        if !(relax > T::zero()) {
            return Err(Error::domain("relaxation length must be positive"));
        }
        let spline = QuadSpline::new(table)?;
        let sew_x = T::lit(spline.domain_end());
        Self::fit(table.len() - 1, sew_x, spline.eval(sew_x)?, spline.deriv(sew_x)?, relax)
    }

    /// Matches value `value` and slope `slope` of some spline at `sew_x`.
    pub fn fit(sew_index: usize, sew_x: T, value: T, slope: T, relax: T) -> Result<Self> {
        if !(relax > T::zero()) {
            return Err(Error::domain("relaxation length must be positive"));
        }
        let c0 = value - asymptote(sew_x)?;
        let c1 = slope - asymptote_deriv(sew_x)?;
        Ok(Self { sew_index, sew_x, c0, c1, relax })
    }

    fn correction(&self, x: T) -> (T, T) {
        let u = x - self.sew_x;
        if self.relax.is_infinite() {
            return (self.c0 + self.c1 * u, self.c1);
        }
        let decay = (-u / self.relax).exp();
        (self.c0 + self.c1 * self.relax * (T::one() - decay), self.c1 * decay)
    }

    /// Corrected asymptote at `x >= sew_x`.
    pub fn eval(&self, x: T) -> Result<T> {
        Ok(asymptote(x)? + self.correction(x).0)
    }

    pub fn deriv(&self, x: T) -> Result<T> {
        Ok(asymptote_deriv(x)? + self.correction(x).1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson rule, independent of the adaptive integrator.
    fn li_simpson(x: f64, panels: usize) -> f64 {
        let h = (x - 2.0) / panels as f64;
        let f = |t: f64| 1.0 / t.ln();
        let mut s = f(2.0) + f(x);
        for k in 1..panels {
            s += f(2.0 + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    fn li_midpoint(x: f64, panels: usize) -> f64 {
        let h = (x - 2.0) / panels as f64;
        (0..panels).map(|k| 1.0 / (2.0 + (k as f64 + 0.5) * h).ln()).sum::<f64>() * h
    }

    #[test]
    fn li_values() {
        assert_eq!(li(2.0).unwrap(), 0.0);
        // 30-digit evaluation of Li(10) - Li(2)
        assert!((li(10.0f64).unwrap() - 5.120_435_724_669_805).abs() < 1e-10);
        assert!((li(10.0).unwrap() - li_simpson(10.0, 20_000)).abs() < 1e-10);
        assert!(li(1.9).is_err());
        assert!((li(10.0f32).unwrap() - 5.120_435_7).abs() < 1e-5);
    }

    #[test]
    fn li_against_midpoint_rule() {
        // midpoint error is about (x - 2) h^2 / 24 max|f''|
        for x in [3.0, 57.5, 1000.0, 10_000.0] {
            let d = (li(x).unwrap() - li_midpoint(x, 1_000_000)).abs();
            assert!(d <= 1e-5, "x={x}: {d}");
        }
    }

    #[test]
    fn li_high_precision_values() {
        for (x, v) in [(1000.0f64, 176.564_494_210_034_73), (5000.0, 683.235_676_504_372_9), (10_000.0, 1245.092_052_119_271)] {
            assert!((li(x).unwrap() - v).abs() <= 1e-9 * v, "x={x}");
        }
    }

    #[test]
    fn li_increasing() {
        let mut prev = li(2.0).unwrap();
        for k in 3..500 {
            let v = li(k as f64).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn mobius_values() {
        let mu = MobiusCache::new(1000);
        assert_eq!((mu.get(1), mu.get(4), mu.get(6), mu.get(30)), (1, 0, 1, -1));
        let divisor_sum: i32 = [1, 2, 3, 4, 6, 12].iter().map(|&d| mu.get(d) as i32).sum();
        assert_eq!(divisor_sum, 0);
        for n in 1..=1000 {
            let s: i32 = (1..=n).filter(|d| n % d == 0).map(|d| mu.get(d) as i32).sum();
            assert_eq!(s, (n == 1) as i32, "n={n}");
        }
    }

    #[test]
    fn mobius_against_factorisation() {
        fn by_trial(mut n: usize) -> i8 {
            let mut sign = 1i8;
            let mut d = 2;
            while d * d <= n {
                if n % d == 0 {
                    n /= d;
                    if n % d == 0 {
                        return 0;
                    }
                    sign = -sign;
                }
                d += 1;
            }
            if n > 1 {
                sign = -sign;
            }
            sign
        }
        let mu = MobiusCache::new(1000);
        let mut mertens = (0i32, 0i32);
        for n in 1..=1000 {
            mertens.0 += mu.get(n) as i32;
            mertens.1 += by_trial(n) as i32;
            assert_eq!(mertens.0, mertens.1, "n={n}");
        }
    }

    #[test]
    fn riemann_values() {
        assert_eq!(riemann_r(2.0).unwrap(), 0.0);
        assert!((riemann_r(100.0f64).unwrap() - 25.0).abs() < 1.5);
        assert!((riemann_r(1e6f64).unwrap() - 78_498.0).abs() < 50.0);
        assert!(riemann_r(1.0).is_err());
    }

    #[test]
    fn riemann_against_direct_sum() {
        // truncated series with the Simpson li as an independent route
        let mu = MobiusCache::new(64);
        for x in [100.0f64, 1000.0, 5000.0] {
            let mut s = 0.0;
            let mut n = 1;
            while x.powf(1.0 / n as f64) >= 2.0 {
                s += mu.get(n) as f64 / n as f64 * li_simpson(x.powf(1.0 / n as f64), 200_000);
                n += 1;
            }
            let d = (riemann_r(x).unwrap() - s).abs();
            assert!(d < 1e-7, "x={x}: {d}");
        }
    }

    #[test]
    fn asymptote_quality() {
        // p(10^4) = 104729, p(10^5) = 1299709, p(10^6) = 15485863
        let rel = |n: f64, p: f64| (asymptote(n).unwrap() - p).abs() / p;
        assert!(rel(1e6, 15_485_863.0) < 1e-3);
        assert!(rel(1e4, 104_729.0) > rel(1e5, 1_299_709.0));
        assert!(rel(1e5, 1_299_709.0) > rel(1e6, 15_485_863.0));
        assert!(asymptote(2.7).is_err());
    }

    #[test]
    fn asymptote_derivative() {
        for x in [1e4f64, 1e5, 1e6] {
            let h = x * 1e-6;
            let fd = (asymptote(x + h).unwrap() - asymptote(x - h).unwrap()) / (2.0 * h);
            let d = asymptote_deriv(x).unwrap();
            assert!((fd - d).abs() <= 1e-6 * d, "x={x}");
        }
        let mut x = 100.0f64;
        let mut prev = asymptote(x).unwrap();
        while x < 1e8 {
            x *= 1.1;
            assert!(asymptote_deriv(x).unwrap() > 0.0);
            let v = asymptote(x).unwrap();
            assert!(v > prev);
            prev = v;
        }
        let ratio = asymptote_deriv(1e8f64).unwrap() / 1e8f64.ln();
        assert!((ratio - 1.0).abs() < 0.25);
    }

    #[test]
    fn sewing_6000() {
        let t = PrimeTable::sieve(60_000).unwrap().first(6000).unwrap();
        let s: AsymptoteSewing<f64> = AsymptoteSewing::new(&t).unwrap();
        assert_eq!(s.sew_x, 5999.5);
        let q = QuadSpline::new(&t).unwrap();
        assert!((s.eval(s.sew_x).unwrap() - q.eval(5999.5).unwrap()).abs() <= 1e-9 * q.eval(5999.5).unwrap());
        assert!((s.deriv(s.sew_x).unwrap() - q.deriv(5999.5).unwrap()).abs() <= 1e-9);
        assert!(s.c0.abs() / asymptote(s.sew_x).unwrap() < 1e-2);
    }

    #[test]
    fn sewing_drift_10k() {
        let t = PrimeTable::sieve(200_000).unwrap().first(10_000).unwrap();
        let s: AsymptoteSewing<f64> = AsymptoteSewing::new(&t).unwrap();
        let mut x = s.sew_x;
        while x <= 2.0 * s.sew_x {
            let raw = asymptote(x).unwrap();
            assert!((s.eval(x).unwrap() - raw).abs() / raw < 5e-3, "x={x}");
            x += 7.3;
        }
    }

    #[test]
    fn affine_sewing_is_c1_too() {
        let t = PrimeTable::sieve(60_000).unwrap().first(6000).unwrap();
        let s = AsymptoteSewing::with_relax(&t, f64::INFINITY).unwrap();
        let r = AsymptoteSewing::<f64>::new(&t).unwrap();
        assert_eq!(s.eval(s.sew_x).unwrap(), r.eval(r.sew_x).unwrap());
        assert_eq!(s.deriv(s.sew_x).unwrap(), r.deriv(r.sew_x).unwrap());
        assert!((s.deriv(s.sew_x + 10.0).unwrap() - (asymptote_deriv(s.sew_x + 10.0).unwrap() + s.c1)).abs() < 1e-12);
    }
}
