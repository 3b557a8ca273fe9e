//! Penalty rows pulling real solutions onto integers or primes.
//!
//! ```text
//! integers:  sum_j sin^2(pi x_j)          = 0
//! primes:    sum_j sin^2(pi p^{-1}(x_j))  = 0
//! ```

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::system::{BoxDomain, ResidualSystem};
use crate::error::{Error, Result};
use crate::inversion::Facade;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    None,
    Integers,
    #[default]
    Primes,
}

/// A base system with one penalty row appended (none for [`PenaltyKind::None`]).
#[derive(Debug, Clone)]
pub struct Penalized<'t, S> {
    base: S,
    kind: PenaltyKind,
    facade: Option<Facade<'t, f64>>,
}

/// Appends the penalty row of `kind` to `base`; `Primes` needs a facade and a
/// domain inside `[2, inf)`.
pub fn build_penalty<'t, S: ResidualSystem>(
    base: S,
    kind: PenaltyKind,
    facade: Option<Facade<'t, f64>>,
) -> Result<Penalized<'t, S>> {
    if kind == PenaltyKind::Primes {
        if facade.is_none() {
            return Err(Error::Config("primes penalty needs an inversion facade".into()));
        }
        if base.domain().lo.iter().any(|&l| l < 2.0) {
            return Err(Error::domain("primes penalty needs a domain inside [2, inf)"));
        }
    }
    Ok(Penalized { base, kind, facade })
}

impl<'t, S: ResidualSystem> Penalized<'t, S> {
    pub fn base(&self) -> &S {
        &self.base
    }

    pub fn kind(&self) -> PenaltyKind {
        self.kind
    }

    pub fn facade(&self) -> Option<&Facade<'t, f64>> {
        self.facade.as_ref()
    }

    /// `(g(v), g'(v))`: identity for integers, `p^{-1}` for primes.
    fn map(&self, v: f64) -> (f64, f64) {
        match (self.kind, &self.facade) {
            (PenaltyKind::Primes, Some(f)) => f.pinv_pair(v).unwrap_or((f64::NAN, f64::NAN)),
            _ => (v, 1.0),
        }
    }

    /// Penalty value and its gradient.
    pub fn penalty(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let mut value = 0.0;
        let mut grad = DVector::zeros(x.len());
        for (j, &v) in x.iter().enumerate() {
            let (g, dg) = self.map(v);
            let (s, c) = (PI * g).sin_cos();
            value += s * s;
            grad[j] = 2.0 * PI * s * c * dg;
        }
        (value, grad)
    }

    fn extra(&self) -> usize {
        usize::from(self.kind != PenaltyKind::None)
    }
}

impl<'t, S: ResidualSystem> ResidualSystem for Penalized<'t, S> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn len(&self) -> usize {
        self.base.len() + self.extra()
    }

    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        let f = self.base.residuals(x);
        if self.kind == PenaltyKind::None {
            return f;
        }
        f.push(self.penalty(x).0)
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.linearize(x).1
    }

    fn targets(&self) -> DVector<f64> {
        let y = self.base.targets();
        if self.kind == PenaltyKind::None {
            return y;
        }
        y.push(0.0)
    }

    fn domain(&self) -> &BoxDomain {
        self.base.domain()
    }

    fn holds_exactly(&self, x: &[i64]) -> bool {
        self.base.holds_exactly(x)
    }

    fn linearize(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let (r, j) = self.base.linearize(x);
        if self.kind == PenaltyKind::None {
            return (r, j);
        }
        let (value, grad) = self.penalty(x);
        let m = r.len();
        let j = j.insert_row(m, 0.0);
        let mut j = j;
        j.set_row(m, &grad.transpose());
        (r.push(value), j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dioph::system::{jacobian_mismatch, quasi_pythagorean, quasi_pythagorean_twin};
    use crate::inversion::Backend;
    use crate::primes::PrimeTable;

    fn box3() -> BoxDomain {
        BoxDomain::cube(3, 2.0, 100.0).unwrap()
    }

    #[test]
    fn zero_at_prime_points() {
        let t = PrimeTable::sieve(10_000).unwrap();
        let f = Facade::new(&t, Backend::Quad).unwrap();
        let s = build_penalty(quasi_pythagorean(box3()).unwrap(), PenaltyKind::Primes, Some(f)).unwrap();
        let (v, g) = s.penalty(&DVector::from_vec(vec![5.0, 5.0, 7.0]));
        // sin(k pi) is a rounding error away from zero
        assert!(v < 1e-28);
        assert!(g.amax() < 1e-12);
        assert_eq!(s.len(), 2);
        assert_eq!(s.targets().as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn integer_penalty() {
        let s = build_penalty(quasi_pythagorean(box3()).unwrap(), PenaltyKind::Integers, None).unwrap();
        let (v, _) = s.penalty(&DVector::from_vec(vec![1.5, 2.0, 2.0]));
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn penalty_jacobian_against_differences() {
        let t = PrimeTable::sieve(10_000).unwrap();
        let f = Facade::new(&t, Backend::Quad).unwrap();
        let s = build_penalty(quasi_pythagorean_twin(box3()).unwrap(), PenaltyKind::Primes, Some(f)).unwrap();
        let x = DVector::from_vec(vec![4.3, 6.1, 8.7]);
        assert!(jacobian_mismatch(&s, &x, 1e-6) <= 1e-4);
    }

    #[test]
    fn primes_mode_preconditions() {
        let low = BoxDomain::cube(3, 1.0, 100.0).unwrap();
        let t = PrimeTable::sieve(1000).unwrap();
        let f = Facade::new(&t, Backend::Quad).unwrap();
        assert!(build_penalty(quasi_pythagorean(low).unwrap(), PenaltyKind::Primes, Some(f)).is_err());
        assert!(build_penalty(quasi_pythagorean(box3()).unwrap(), PenaltyKind::Primes, None).is_err());
        let none = build_penalty(quasi_pythagorean(box3()).unwrap(), PenaltyKind::None, None).unwrap();
        assert_eq!(none.len(), 1);
    }
}
