//! Deflation of already extracted solutions.
//!
//! Each found solution `s_r` contributes a local extractor
//! `e_r(x) = (1 - exp(-|x - s_r|))^{-1}`; the deflated system solves
//! `E(x) (f(x) - y) = 0` with `E = prod_r e_r`, so the `s_r` stop being roots
//! while every other root survives.

use nalgebra::{DMatrix, DVector};

use super::system::{BoxDomain, ResidualSystem};

/// Ceiling on the extractor product.
pub const EXTRACTOR_CAP: f64 = 1e12;

/// Start points closer than this to a found solution are rejected.
pub const REJECT_RADIUS: f64 = 1e-6;

/// `prod_r e_r(x)` and its gradient, capped at [`EXTRACTOR_CAP`] (the gradient
/// vanishes once capped).
pub fn extractor_with_gradient(x: &DVector<f64>, found: &[DVector<f64>]) -> (f64, DVector<f64>) {
    let mut value = 1.0;
    let mut dlog = DVector::zeros(x.len());
    for s in found {
        let diff = x - s;
        let d = diff.norm();
        if d == 0.0 {
            return (EXTRACTOR_CAP, DVector::zeros(x.len()));
        }
        let q = (-d).exp();
        let gap = -(-d).exp_m1();
        value /= gap;
        dlog -= diff * (q / gap / d);
        if value >= EXTRACTOR_CAP {
            return (EXTRACTOR_CAP, DVector::zeros(x.len()));
        }
    }
    let grad = dlog * value;
    (value, grad)
}

pub fn extractor(x: &DVector<f64>, found: &[DVector<f64>]) -> f64 {
    extractor_with_gradient(x, found).0
}

/// Whether `x` lies within [`REJECT_RADIUS`] of a found solution.
pub fn is_rejected(x: &DVector<f64>, found: &[DVector<f64>]) -> bool {
    found.iter().any(|s| (x - s).norm() < REJECT_RADIUS)
}

/// `E(x) (f(x) - y)` with zero targets.
#[derive(Debug, Clone)]
pub struct Deflated<'a, S: ?Sized> {
    inner: &'a S,
    found: Vec<DVector<f64>>,
}

impl<'a, S: ResidualSystem + ?Sized> Deflated<'a, S> {
    pub fn new(inner: &'a S, found: Vec<DVector<f64>>) -> Self {
        Self { inner, found }
    }

    pub fn found(&self) -> &[DVector<f64>] {
        &self.found
    }
}

impl<'a, S: ResidualSystem + ?Sized> ResidualSystem for Deflated<'a, S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn len(&self) -> usize {
        self.inner.len()
    }

    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.inner.residuals(x) - self.inner.targets()) * extractor(x, &self.found)
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.linearize(x).1
    }

    fn targets(&self) -> DVector<f64> {
        DVector::zeros(self.len())
    }

    fn domain(&self) -> &BoxDomain {
        self.inner.domain()
    }

    fn holds_exactly(&self, x: &[i64]) -> bool {
        self.inner.holds_exactly(x)
    }

    fn linearize(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let (r, j) = self.inner.linearize(x);
        if self.found.is_empty() {
            return (r, j);
        }
        let (e, grad) = extractor_with_gradient(x, &self.found);
        let jd = j * e + &r * grad.transpose();
        (r * e, jd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dioph::system::{jacobian_mismatch, quasi_pythagorean};

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    #[test]
    fn extractor_values() {
        let x = v(&[0.0, 0.0]);
        assert_eq!(extractor(&x, &[]), 1.0);
        let ln2 = std::f64::consts::LN_2;
        assert!((extractor(&x, &[v(&[ln2, 0.0])]) - 2.0).abs() < 1e-12);
        assert!((extractor(&x, &[v(&[ln2, 0.0]), v(&[0.0, -ln2])]) - 4.0).abs() < 1e-12);
        assert_eq!(extractor(&x, &[x.clone()]), EXTRACTOR_CAP);
        assert_eq!(extractor(&x, &[v(&[1e-14, 0.0])]), EXTRACTOR_CAP);
    }

    #[test]
    fn gradient_against_differences() {
        let found = [v(&[1.0, 2.0]), v(&[-0.5, 0.3])];
        let x = v(&[0.2, 0.7]);
        let (_, g) = extractor_with_gradient(&x, &found);
        let h = 1e-6;
        for c in 0..2 {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[c] += h;
            xm[c] -= h;
            let fd = (extractor(&xp, &found) - extractor(&xm, &found)) / (2.0 * h);
            assert!((fd - g[c]).abs() <= 1e-6 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn deflated_jacobian() {
        let base = quasi_pythagorean(BoxDomain::cube(3, 2.0, 100.0).unwrap()).unwrap();
        let d = Deflated::new(&base, vec![v(&[5.0, 5.0, 7.0])]);
        let x = v(&[5.3, 4.6, 7.2]);
        assert!(jacobian_mismatch(&d, &x, 1e-6) <= 1e-4);
        // the found root is no longer a root
        assert!(d.residuals(&v(&[5.0 + 1e-9, 5.0, 7.0])).amax() > 1e-3);
        assert!(d.residuals(&v(&[7.0, 11.0, 13.0])).amax() == 0.0);
    }

    #[test]
    fn rejection_radius() {
        let found = [v(&[5.0, 5.0, 7.0])];
        assert!(is_rejected(&v(&[5.0, 5.0, 7.0 + 1e-7]), &found));
        assert!(!is_rejected(&v(&[5.0, 5.0, 7.0 + 1e-5]), &found));
    }
}
