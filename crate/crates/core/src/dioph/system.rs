//! Residual systems `f(x) = y` with polynomial integer equations as the main
//! instance.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `lo <= x <= hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let d = Self { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; n], vec![hi; n])
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.len() != self.hi.len() || self.lo.is_empty() {
            return Err(Error::Config("domain bounds must be non-empty and of equal length".into()));
        }
        for (l, h) in self.lo.iter().zip(&self.hi) {
            if !(l.is_finite() && h.is_finite() && l <= h) {
                return Err(Error::Config(format!("bad domain interval [{l}, {h}]")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| l <= v && v <= h)
    }

    pub fn clamp(&self, x: &mut DVector<f64>) {
        for (v, (l, h)) in x.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *v = v.clamp(*l, *h);
        }
    }

    /// Uniform point of the box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.lo.iter().zip(&self.hi).map(|(&l, &h)| if l < h { rng.gen_range(l..h) } else { l }),
        )
    }
}

/// `m` residuals in `n` unknowns with targets `y` and a box of admissible
/// points.
pub trait ResidualSystem: Sync {
    /// Number of unknowns `n`.
    fn dim(&self) -> usize;

    /// Number of residuals `m`.
    fn len(&self) -> usize;

    fn residuals(&self, x: &DVector<f64>) -> DVector<f64>;

    /// `m x n` Jacobian of [`ResidualSystem::residuals`].
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;

    fn targets(&self) -> DVector<f64>;

    fn domain(&self) -> &BoxDomain;

    /// Whether the integer point satisfies the underlying equations exactly.
    fn holds_exactly(&self, x: &[i64]) -> bool;

    /// `f(x) - y` together with the Jacobian.
    fn linearize(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        (self.residuals(x) - self.targets(), self.jacobian(x))
    }
}

impl<S: ResidualSystem + ?Sized> ResidualSystem for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn len(&self) -> usize {
        (**self).len()
    }
    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).residuals(x)
    }
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (**self).jacobian(x)
    }
    fn targets(&self) -> DVector<f64> {
        (**self).targets()
    }
    fn domain(&self) -> &BoxDomain {
        (**self).domain()
    }
    fn holds_exactly(&self, x: &[i64]) -> bool {
        (**self).holds_exactly(x)
    }
    fn linearize(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        (**self).linearize(x)
    }
}

/// `coeff * x_1^{powers[0]} * ... * x_n^{powers[n-1]}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: i64,
    pub powers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Self { terms }
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff as f64 * t.powers.iter().zip(x.iter()).map(|(&k, v)| v.powi(k as i32)).product::<f64>())
            .sum()
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(x.len());
        for t in &self.terms {
            for (j, &kj) in t.powers.iter().enumerate() {
                if kj == 0 {
                    continue;
                }
                let rest: f64 = t
                    .powers
                    .iter()
                    .zip(x.iter())
                    .enumerate()
                    .map(|(l, (&k, v))| if l == j { kj as f64 * v.powi(k as i32 - 1) } else { v.powi(k as i32) })
                    .product();
                g[j] += t.coeff as f64 * rest;
            }
        }
        g
    }

    /// Exact value at an integer point; `None` on overflow.
    pub fn eval_exact(&self, x: &[i64]) -> Option<i128> {
        let mut sum = 0i128;
        for t in &self.terms {
            let mut term = t.coeff as i128;
            for (&k, &v) in t.powers.iter().zip(x) {
                term = term.checked_mul((v as i128).checked_pow(k)?)?;
            }
            sum = sum.checked_add(term)?;
        }
        Some(sum)
    }
}

/// Integer polynomial equations `P_k(x) = y_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolySystem {
    pub equations: Vec<Polynomial>,
    pub targets: Vec<i64>,
    pub domain: BoxDomain,
}

impl PolySystem {
    pub fn new(equations: Vec<Polynomial>, targets: Vec<i64>, domain: BoxDomain) -> Result<Self> {
        let s = Self { equations, targets, domain };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        let n = self.domain.dim();
        if self.equations.is_empty() || self.equations.len() != self.targets.len() {
            return Err(Error::Config("need one target per equation and at least one equation".into()));
        }
        for t in self.equations.iter().flat_map(|e| &e.terms) {
            if t.powers.len() != n {
                return Err(Error::Config(format!("monomial has {} powers for {n} unknowns", t.powers.len())));
            }
        }
        Ok(())
    }
}

impl ResidualSystem for PolySystem {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn len(&self) -> usize {
        self.equations.len()
    }

    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.equations.iter().map(|e| e.eval(x)))
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.len(), self.dim());
        for (k, e) in self.equations.iter().enumerate() {
            j.set_row(k, &e.gradient(x).transpose());
        }
        j
    }

    fn targets(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.targets.iter().map(|&t| t as f64))
    }

    fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    fn holds_exactly(&self, x: &[i64]) -> bool {
        x.len() == self.dim()
            && self.equations.iter().zip(&self.targets).all(|(e, &t)| e.eval_exact(x) == Some(t as i128))
    }
}

fn mono(coeff: i64, powers: [u32; 3]) -> Monomial {
    Monomial { coeff, powers: powers.to_vec() }
}

/// `x1^2 + x2^2 - x3^2 = 1`.
pub fn quasi_pythagorean(domain: BoxDomain) -> Result<PolySystem> {
    let eq = Polynomial::new(vec![mono(1, [2, 0, 0]), mono(1, [0, 2, 0]), mono(-1, [0, 0, 2])]);
    PolySystem::new(vec![eq], vec![1], domain)
}

/// [`quasi_pythagorean`] together with `x3 - x1 = 2`.
pub fn quasi_pythagorean_twin(domain: BoxDomain) -> Result<PolySystem> {
    let mut s = quasi_pythagorean(domain)?;
    s.equations.push(Polynomial::new(vec![mono(1, [0, 0, 1]), mono(-1, [1, 0, 0])]));
    s.targets.push(2);
    s.validate()?;
    Ok(s)
}

/// Largest relative deviation between the analytic Jacobian and central
/// differences with step `h`.
pub fn jacobian_mismatch<S: ResidualSystem + ?Sized>(sys: &S, x: &DVector<f64>, h: f64) -> f64 {
    let j = sys.jacobian(x);
    let mut worst = 0.0f64;
    for c in 0..sys.dim() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[c] += h;
        xm[c] -= h;
        let fd = (sys.residuals(&xp) - sys.residuals(&xm)) / (2.0 * h);
        for r in 0..sys.len() {
            let scale = j[(r, c)].abs().max(fd[r].abs()).max(1.0);
            worst = worst.max((j[(r, c)] - fd[r]).abs() / scale);
        }
    }
    worst
}
