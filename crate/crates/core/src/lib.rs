//! High-order finite-difference WENO solver for hyperbolic conservation laws
//! with parametrized flux limiters that enforce a discrete maximum principle
//! (scalar problems) or positivity of density and pressure (Euler systems).

pub mod error;
pub mod harness;
pub mod io;
pub mod limiter;
pub mod mesh;
pub mod physics;
pub mod rk;
pub mod weno;

pub use error::{Result, SolverError};
