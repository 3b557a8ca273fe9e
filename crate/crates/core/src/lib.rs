//! Interpolating splines of the prime function `p(n)`, their inverses, the
//! asymptotic continuation, and a regularized Gauss-Newton solver for
//! Diophantine systems posed over the continuous prime function.

pub mod analysis;
pub mod asymptotics;
pub mod cubic;
pub mod dioph;
pub mod error;
pub mod inversion;
pub mod primes;
pub mod quad;
pub mod quadrature;
pub mod scalar;

pub use asymptotics::{asymptote, asymptote_deriv, li, riemann_r, AsymptoteSewing, MobiusCache};
pub use cubic::{CubicSegment, CubicSpline, TripletReport};
pub use error::{Error, Result};
pub use inversion::{Backend, Facade, InitialGuess, NewtonConfig, NewtonStep, NewtonTrace};
pub use primes::PrimeTable;
pub use quad::{InverseSegment, QuadCoeffRow, QuadSegmentPair, QuadSpline};
pub use scalar::Real;

pub type Facade64<'t> = Facade<'t, f64>;
pub type Facade32<'t> = Facade<'t, f32>;
pub type NewtonConfig64 = NewtonConfig<f64>;
pub type NewtonConfig32 = NewtonConfig<f32>;
pub type NewtonTrace64 = NewtonTrace<f64>;
pub type AsymptoteSewing64 = AsymptoteSewing<f64>;
pub type AsymptoteSewing32 = AsymptoteSewing<f32>;
