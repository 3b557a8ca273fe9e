//! Diophantine equations over integers or primes as regularized nonlinear
//! least squares: penalty rows, deflation, rgn iteration and multi-start
//! extraction.

pub mod deflation;
pub mod penalty;
pub mod problem;
pub mod rgn;
pub mod solve;
pub mod system;

pub use deflation::{extractor, Deflated};
pub use penalty::{build_penalty, PenaltyKind, Penalized};
pub use problem::{EquationSpec, Preset, ProblemConfig};
pub use rgn::{rgn_step, run_attempt, Attempt, RgnState, RgnStep, RgnTraceEntry, Scaling};
pub use solve::{solve_all, verify_rounded, AttemptRecord, FoundSolution, Outcome, RgnConfig, SolveRun};
pub use system::{quasi_pythagorean, quasi_pythagorean_twin, BoxDomain, Monomial, PolySystem, Polynomial, ResidualSystem};
