//! Density of the stopped exponential functional `A(tau) = int_0^tau X(t)^2 dt`
//! of geometric Brownian motion `X(t) = x exp(B(t) - 2 mu t)` killed at the
//! first hitting time of 1, its tail behaviour, and the half-space Poisson
//! kernel of hyperbolic Brownian motion with drift.

pub mod density;
pub mod error;
pub mod mc;
pub mod poisson;
pub mod quad;
pub mod specfun;
pub mod wlambda;

pub use error::{Error, Result};
