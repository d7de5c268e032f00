//! Tail asymptotics c± x^(-alpha*) (ln x)^(k*) for polynomials of independent
//! heavy-tailed random variables, and simulation of the nonconventional sums
//! S_N(t) = sum_{n <= Nt} F(X_{q_1(n)}, ..., X_{q_l(n)}) together with the
//! diagnostics that confront the simulated paths with their stable limits.

pub mod diagnostics;
pub mod error;
pub mod indexcalc;
pub mod numeric;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod simulator;
pub mod tailspec;

pub use error::{Error, Result};
