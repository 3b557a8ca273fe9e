//! Autoregularized Gauss-Newton (rgn) iteration.
//!
//! ```text
//! (J^T J + eps_k I) (x_{k+1} - x_k) = -F_k,     F_k = J^T (f(x_k) - y)
//! eps_k = (sqrt(tau_k^2 + 4 N rho_k) - tau_k) / 2
//! tau_k = |J^T J|_inf,  rho_k = |F_k|_inf,  N = (eps_0 + eps_0 tau_0) / rho_0
//! ```
//!
//! The linear problem is solved through the SVD of `J`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::system::ResidualSystem;
use crate::error::{Error, Result};
use crate::inversion::positive_root;

/// Singular values below this fraction of the largest are dropped.
pub const SVD_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    #[default]
    Off,
    /// Unit Euclidean norm for every Jacobian column.
    ColumnNorm,
}

/// Regularization state of one attempt; `N` is fixed by the first step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RgnState {
    pub eps0: f64,
    pub n_const: Option<f64>,
}

impl RgnState {
    pub fn new(eps0: f64) -> Self {
        Self { eps0, n_const: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RgnTraceEntry {
    pub eps: f64,
    pub tau: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RgnStep {
    /// Next iterate, clamped to the domain.
    pub x: DVector<f64>,
    pub eps: f64,
    pub tau: f64,
    pub rho: f64,
    /// `|x_{k+1} - x_k|_inf` after clamping.
    pub moved: f64,
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// One rgn step from `x`.
pub fn rgn_step<S: ResidualSystem + ?Sized>(
    sys: &S,
    x: &DVector<f64>,
    state: &mut RgnState,
    scaling: Scaling,
) -> Result<RgnStep> {
    let (r, mut j) = sys.linearize(x);
    if !r.iter().chain(j.iter()).all(|v| v.is_finite()) {
        return Err(Error::domain("non-finite residual or Jacobian"));
    }
    let mut scale = DVector::from_element(x.len(), 1.0);
    if scaling == Scaling::ColumnNorm {
        for (c, mut col) in j.column_iter_mut().enumerate() {
            let norm = col.norm();
            if norm > 0.0 {
                col /= norm;
                scale[c] = 1.0 / norm;
            }
        }
    }
    let f = j.tr_mul(&r);
    let tau = inf_norm(&j.tr_mul(&j));
    let rho = f.amax();
    let n_const = *state.n_const.get_or_insert_with(|| if rho > 0.0 { (state.eps0 + state.eps0 * tau) / rho } else { 0.0 });
    let eps = positive_root(tau, n_const * rho);

    let svd = j.svd(true, true);
    let (u, vt) = match (&svd.u, &svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::domain("SVD failed")),
    };
    let sigma_max = svd.singular_values.max();
    let mut delta = DVector::zeros(x.len());
    if rho > 0.0 {
        for (k, &s) in svd.singular_values.iter().enumerate() {
            if s <= SVD_CUTOFF * sigma_max || s == 0.0 {
                continue;
            }
            let coeff = s / (s * s + eps) * u.column(k).dot(&r);
            delta -= vt.row(k).transpose() * coeff;
        }
    }
    let mut next = x + delta.component_mul(&scale);
    if !next.iter().all(|v| v.is_finite()) {
        return Err(Error::domain("non-finite step"));
    }
    sys.domain().clamp(&mut next);
    let moved = (&next - x).amax();
    Ok(RgnStep { x: next, eps, tau, rho, moved })
}

/// Result of iterating [`rgn_step`] from one start.
#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    pub x: DVector<f64>,
    pub iterations: usize,
    /// `|F|_inf <= tol_f` reached.
    pub converged: bool,
    /// Last `|F|_inf`.
    pub rho: f64,
    /// Aborted on a non-finite value.
    pub failed: bool,
    pub trace: Vec<RgnTraceEntry>,
}

/// Runs rgn until `|F|_inf <= tol_f`, `max_iter` steps, or a stalled iterate.
pub fn run_attempt<S: ResidualSystem + ?Sized>(
    sys: &S,
    x0: DVector<f64>,
    eps0: f64,
    max_iter: usize,
    tol_f: f64,
    scaling: Scaling,
) -> Attempt {
    let mut state = RgnState::new(eps0);
    let mut x = x0;
    sys.domain().clamp(&mut x);
    let mut trace = Vec::new();
    let mut rho = f64::INFINITY;
    for k in 0..max_iter {
        let step = match rgn_step(sys, &x, &mut state, scaling) {
            Ok(s) => s,
            Err(_) => return Attempt { x, iterations: k, converged: false, rho, failed: true, trace },
        };
        rho = step.rho;
        trace.push(RgnTraceEntry { eps: step.eps, tau: step.tau, rho: step.rho });
        if rho <= tol_f {
            return Attempt { x, iterations: k, converged: true, rho, failed: false, trace };
        }
        let stalled = step.moved <= f64::EPSILON * x.amax().max(1.0);
        x = step.x;
        if stalled {
            return Attempt { x, iterations: k + 1, converged: false, rho, failed: false, trace };
        }
    }
    Attempt { x, iterations: max_iter, converged: false, rho, failed: false, trace }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dioph::penalty::{build_penalty, PenaltyKind};
    use crate::dioph::system::{quasi_pythagorean, BoxDomain};
    use crate::inversion::{Backend, Facade};
    use crate::primes::PrimeTable;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    #[test]
    fn zero_step_at_root() {
        let s = quasi_pythagorean(BoxDomain::cube(3, 2.0, 100.0).unwrap()).unwrap();
        let mut st = RgnState::new(1e-2);
        let step = rgn_step(&s, &v(&[5.0, 5.0, 7.0]), &mut st, Scaling::Off).unwrap();
        assert_eq!(step.eps, 0.0);
        assert_eq!(step.moved, 0.0);
    }

    #[test]
    fn eps_identity_each_iteration() {
        let t = PrimeTable::sieve(1000).unwrap();
        let f = Facade::new(&t, Backend::Quad).unwrap();
        let s = build_penalty(quasi_pythagorean(BoxDomain::cube(3, 2.0, 100.0).unwrap()).unwrap(), PenaltyKind::Primes, Some(f))
            .unwrap();
        let mut st = RgnState::new(1.0);
        let mut x = v(&[4.8, 5.2, 6.9]);
        for _ in 0..30 {
            let step = rgn_step(&s, &x, &mut st, Scaling::Off).unwrap();
            let n = st.n_const.unwrap();
            let lhs = step.eps * (step.eps + step.tau);
            assert!((lhs - n * step.rho).abs() <= 1e-9 * (n * step.rho).max(f64::MIN_POSITIVE));
            x = step.x;
        }
    }

    #[test]
    fn converges_to_5_5_7() {
        let t = PrimeTable::sieve(1000).unwrap();
        let f = Facade::new(&t, Backend::Quad).unwrap();
        let s = build_penalty(quasi_pythagorean(BoxDomain::cube(3, 2.0, 100.0).unwrap()).unwrap(), PenaltyKind::Primes, Some(f))
            .unwrap();
        // the penalty has a double root, so |F| ~ dist^3 and the default
        // tolerance stops a few 1e-6 short
        let a = run_attempt(&s, v(&[4.8, 5.2, 6.9]), 1e-2, 200, 1e-10, Scaling::Off);
        assert!((&a.x - v(&[5.0, 5.0, 7.0])).amax() <= 1e-5, "{:?}", a.x);
        let a = run_attempt(&s, v(&[4.8, 5.2, 6.9]), 1e-2, 200, 1e-16, Scaling::Off);
        assert!((&a.x - v(&[5.0, 5.0, 7.0])).amax() <= 1e-6, "{:?}", a.x);
    }

    #[test]
    fn linear_system_in_one_step() {
        // tiny eps0 makes the first step a plain Gauss-Newton step
        let d = BoxDomain::cube(2, -10.0, 10.0).unwrap();
        let sys = crate::dioph::system::PolySystem::new(
            vec![
                crate::dioph::system::Polynomial::new(vec![
                    crate::dioph::system::Monomial { coeff: 1, powers: vec![1, 0] },
                    crate::dioph::system::Monomial { coeff: 2, powers: vec![0, 1] },
                ]),
                crate::dioph::system::Polynomial::new(vec![crate::dioph::system::Monomial { coeff: 3, powers: vec![1, 0] }]),
            ],
            vec![5, 3],
            d,
        )
        .unwrap();
        for scaling in [Scaling::Off, Scaling::ColumnNorm] {
            let a = run_attempt(&sys, v(&[0.0, 0.0]), 1e-14, 50, 1e-12, scaling);
            assert!(a.converged);
            assert!((a.x - v(&[1.0, 2.0])).amax() < 1e-9);
        }
    }
}
