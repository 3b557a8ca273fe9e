//! Multi-start extraction of all integer or prime solutions.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::deflation::{is_rejected, Deflated};
use super::penalty::{PenaltyKind, Penalized};
use super::rgn::{run_attempt, Attempt, RgnTraceEntry, Scaling};
use super::system::ResidualSystem;
use crate::error::{Error, Result};
use crate::primes::{is_prime_trial, PrimeTable};

/// Hard limit on extractions per run.
pub const MAX_EXTRACTIONS: usize = 20;

/// Regularizers cycled over the restarts of a round.
pub const EPS0_TABLE: [f64; 4] = [1e-4, 1e-2, 1.0, 1e2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RgnConfig {
    /// Regularizer for the user-supplied start `x0`.
    pub eps0: f64,
    /// Regularizers for the random restarts, used in turn.
    pub eps0_table: Vec<f64>,
    pub max_iter: usize,
    /// Stop when `|F|_inf <= tol_f`.
    pub tol_f: f64,
    /// Random starts per round.
    pub restarts: usize,
    pub max_rounds: usize,
    pub rng_seed: u64,
    pub max_extractions: usize,
    pub scaling: Scaling,
    /// Optional first start.
    pub x0: Option<Vec<f64>>,
    /// Largest distance to the rounded tuple accepted by verification.
    pub round_tol: f64,
    /// Run the attempts of a round on the rayon pool.
    pub parallel: bool,
}

impl Default for RgnConfig {
    fn default() -> Self {
        Self {
            eps0: 1e-2,
            eps0_table: EPS0_TABLE.to_vec(),
            max_iter: 200,
            tol_f: 1e-10,
            restarts: 1024,
            max_rounds: 64,
            rng_seed: 1,
            max_extractions: MAX_EXTRACTIONS,
            scaling: Scaling::Off,
            x0: None,
            round_tol: 1e-4,
            parallel: true,
        }
    }
}

impl RgnConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.max_extractions == 0 || self.max_extractions > MAX_EXTRACTIONS {
            return bad("max_extractions must lie in 1..=20");
        }
        if !(self.eps0 > 0.0) || self.eps0_table.is_empty() || self.eps0_table.iter().any(|&e| !(e > 0.0)) {
            return bad("regularizers must be positive");
        }
        if self.max_iter == 0 || self.restarts == 0 || self.max_rounds == 0 {
            return bad("max_iter, restarts and max_rounds must be positive");
        }
        if !(self.tol_f > 0.0) || !(self.round_tol > 0.0 && self.round_tol < 0.5) {
            return bad("tol_f must be positive and round_tol in (0, 0.5)");
        }
        if self.x0.as_ref().is_some_and(|x| x.len() != dim) {
            return bad("x0 has the wrong dimension");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Verified and new.
    Extracted,
    /// Verified but already known.
    Duplicate,
    /// Ended away from a verifiable integer point.
    Unverified,
    /// Start too close to a found solution.
    Rejected,
    /// Non-finite values.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttemptRecord {
    pub round: usize,
    pub start: Vec<f64>,
    pub eps0: f64,
    pub iterations: usize,
    pub converged: bool,
    pub rho: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoundSolution {
    pub x: Vec<f64>,
    /// `|f(x) - y|_inf` of the undeflated system.
    pub residual_norm: f64,
    pub tuple: Vec<i64>,
    pub round: usize,
    /// `(eps_k, tau_k, rho_k)` of the extracting attempt.
    pub trace: Vec<RgnTraceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveRun {
    pub found: Vec<FoundSolution>,
    pub rounded: Vec<Vec<i64>>,
    pub restart_log: Vec<AttemptRecord>,
    pub rounds: usize,
    /// Stopped because a whole round brought nothing new.
    pub exhausted: bool,
}

fn is_prime(n: i64, table: Option<&PrimeTable>) -> bool {
    if n < 2 {
        return false;
    }
    table.and_then(|t| t.is_prime(n as u64)).unwrap_or_else(|| is_prime_trial(n as u64))
}

/// Rounds `x` and returns the tuple if it is within `tol` of `x`, lies in the
/// domain, is prime in primes mode and satisfies the equations exactly.
pub fn verify_rounded<S: ResidualSystem + ?Sized>(
    x: &DVector<f64>,
    sys: &S,
    kind: PenaltyKind,
    table: Option<&PrimeTable>,
    tol: f64,
) -> Option<Vec<i64>> {
    let mut tuple = Vec::with_capacity(x.len());
    for &v in x.iter() {
        let r = v.round();
        if !((v - r).abs() <= tol) || r.abs() > 9e15 {
            return None;
        }
        tuple.push(r as i64);
    }
    let as_real = DVector::from_iterator(tuple.len(), tuple.iter().map(|&v| v as f64));
    if !sys.domain().contains(&as_real) {
        return None;
    }
    if kind == PenaltyKind::Primes && !tuple.iter().all(|&v| is_prime(v, table)) {
        return None;
    }
    sys.holds_exactly(&tuple).then_some(tuple)
}

/// Repeats rounds of deflated multi-start rgn until `max_extractions`
/// solutions are known, a round brings nothing new, or `max_rounds` is hit.
pub fn solve_all<S: ResidualSystem>(sys: &Penalized<'_, S>, cfg: &RgnConfig) -> Result<SolveRun> {
    cfg.validate(sys.dim())?;
    let kind = sys.kind();
    let table = sys.facade().map(|f| f.table());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut run = SolveRun { found: Vec::new(), rounded: Vec::new(), restart_log: Vec::new(), rounds: 0, exhausted: false };
    let mut deflate: Vec<DVector<f64>> = Vec::new();

    for round in 0..cfg.max_rounds {
        run.rounds = round + 1;
        let mut starts: Vec<(DVector<f64>, f64)> = Vec::with_capacity(cfg.restarts + 1);
        if round == 0 {
            if let Some(x0) = &cfg.x0 {
                starts.push((DVector::from_vec(x0.clone()), cfg.eps0));
            }
        }
        for k in 0..cfg.restarts {
            starts.push((sys.domain().sample(&mut rng), cfg.eps0_table[k % cfg.eps0_table.len()]));
        }

        let deflated = Deflated::new(sys, deflate.clone());
        let work = |(x0, eps0): &(DVector<f64>, f64)| -> Option<Attempt> {
            if is_rejected(x0, &deflate) {
                return None;
            }
            Some(run_attempt(&deflated, x0.clone(), *eps0, cfg.max_iter, cfg.tol_f, cfg.scaling))
        };
        let attempts: Vec<Option<Attempt>> =
            if cfg.parallel { starts.par_iter().map(work).collect() } else { starts.iter().map(work).collect() };

        let mut fresh = 0;
        for ((x0, eps0), attempt) in starts.iter().zip(attempts) {
            let mut record = AttemptRecord {
                round,
                start: x0.iter().copied().collect(),
                eps0: *eps0,
                iterations: 0,
                converged: false,
                rho: f64::NAN,
                outcome: Outcome::Rejected,
            };
            if let Some(a) = attempt {
                record.iterations = a.iterations;
                record.converged = a.converged;
                record.rho = a.rho;
                record.outcome = if a.failed {
                    Outcome::Failed
                } else {
                    match verify_rounded(&a.x, sys, kind, table, cfg.round_tol) {
                        None => Outcome::Unverified,
                        Some(t) if run.rounded.contains(&t) || is_rejected(&a.x, &deflate) => Outcome::Duplicate,
                        Some(_) if run.found.len() >= cfg.max_extractions => Outcome::Duplicate,
                        Some(t) => {
                            let (r, _) = sys.linearize(&a.x);
                            run.found.push(FoundSolution {
                                x: a.x.iter().copied().collect(),
                                residual_norm: r.amax(),
                                tuple: t.clone(),
                                round,
                                trace: a.trace,
                            });
                            run.rounded.push(t);
                            fresh += 1;
                            Outcome::Extracted
                        }
                    }
                };
            }
            run.restart_log.push(record);
        }
        deflate = run.rounded.iter().map(|t| DVector::from_iterator(t.len(), t.iter().map(|&v| v as f64))).collect();
        if run.found.len() >= cfg.max_extractions {
            break;
        }
        if fresh == 0 {
            run.exhausted = true;
            break;
        }
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dioph::penalty::build_penalty;
    use crate::dioph::system::{quasi_pythagorean, quasi_pythagorean_twin, BoxDomain};
    use crate::inversion::{Backend, Facade};

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    fn box3() -> BoxDomain {
        BoxDomain::cube(3, 2.0, 100.0).unwrap()
    }

    #[test]
    fn verification() {
        let t = PrimeTable::sieve(1000).unwrap();
        let s = quasi_pythagorean(box3()).unwrap();
        let p = PenaltyKind::Primes;
        assert_eq!(verify_rounded(&v(&[4.9999997, 5.0000001, 7.0000002]), &s, p, Some(&t), 1e-4), Some(vec![5, 5, 7]));
        assert_eq!(verify_rounded(&v(&[6.0, 6.0, 8.485]), &s, p, Some(&t), 1e-4), None);
        assert_eq!(verify_rounded(&v(&[7.0, 11.0, 13.0]), &s, p, None, 1e-4), Some(vec![7, 11, 13]));
        // 1^2 + 1^2 = 1^2 + 1 holds but 1 is outside the box and not prime
        assert_eq!(verify_rounded(&v(&[1.0, 1.0, 1.0]), &s, p, Some(&t), 1e-4), None);
        // 4^2 + 7^2 = 8^2 + 1 holds over the integers only
        assert_eq!(verify_rounded(&v(&[4.0, 7.0, 8.0]), &s, PenaltyKind::Integers, None, 1e-4), Some(vec![4, 7, 8]));
        assert_eq!(verify_rounded(&v(&[4.0, 7.0, 8.0]), &s, p, None, 1e-4), None);
    }

    #[test]
    fn config_validation() {
        let mut c = RgnConfig::default();
        assert!(c.validate(3).is_ok());
        c.max_extractions = 21;
        assert!(c.validate(3).is_err());
        c = RgnConfig { x0: Some(vec![1.0]), ..Default::default() };
        assert!(c.validate(3).is_err());
        let json = r#"{"restarts": 10, "scaling": "column_norm"}"#;
        let c: RgnConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.restarts, 10);
        assert_eq!(c.scaling, Scaling::ColumnNorm);
        assert_eq!(c.eps0_table, EPS0_TABLE.to_vec());
        assert!(serde_json::from_str::<RgnConfig>(r#"{"restart": 10}"#).is_err());
    }

    #[test]
    fn twin_system_small_run() {
        let t = PrimeTable::sieve(10_000).unwrap();
        let f = Facade::new(&t, Backend::Quad).unwrap();
        let s = build_penalty(quasi_pythagorean_twin(box3()).unwrap(), PenaltyKind::Primes, Some(f)).unwrap();
        let cfg = RgnConfig { restarts: 512, rng_seed: 7, ..Default::default() };
        let run = solve_all(&s, &cfg).unwrap();
        for t in &run.rounded {
            assert!(s.holds_exactly(t));
        }
        assert!(!run.rounded.is_empty());
    }

    #[test]
    fn deflation_pushes_away_from_found() {
        let t = PrimeTable::sieve(10_000).unwrap();
        let f = Facade::new(&t, Backend::Quad).unwrap();
        let s = build_penalty(quasi_pythagorean_twin(box3()).unwrap(), PenaltyKind::Primes, Some(f)).unwrap();
        let root = v(&[11.0, 7.0, 13.0]);
        let d = Deflated::new(&s, vec![root.clone()]);
        for dir in [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.6, 0.0, 0.8]] {
            let x0 = &root + v(&dir) * 0.01;
            let a = run_attempt(&d, x0, 1e-2, 200, 1e-10, Scaling::Off);
            assert!((a.x - &root).amax() > 1e-4);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let t = PrimeTable::sieve(10_000).unwrap();
        let f = Facade::new(&t, Backend::Quad).unwrap();
        let s = build_penalty(quasi_pythagorean_twin(box3()).unwrap(), PenaltyKind::Primes, Some(f)).unwrap();
        let par = RgnConfig { restarts: 128, max_rounds: 2, rng_seed: 3, ..Default::default() };
        let seq = RgnConfig { parallel: false, ..par.clone() };
        let a = solve_all(&s, &par).unwrap();
        let b = solve_all(&s, &seq).unwrap();
        assert_eq!(a, b);
    }
}
