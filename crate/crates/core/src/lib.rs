//! Exact and high-precision machinery for Möbius-twisted polynomial
//! exponential sums `sum mu(n) e(n^k alpha)` over short intervals.

pub mod approx;
pub mod arith;
pub mod baseline;
pub mod characters;
pub mod config;
pub mod error;
pub mod kernel;
pub mod phase;
pub mod sieve;
pub mod sweep;
pub mod vaughan;

pub use error::{Error, Result};
pub use phase::PhaseReal;
