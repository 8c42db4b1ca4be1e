//! Complex and real k-Hessian calculus on the unit ball.
//!
//! * [`symfun`]: normalized elementary symmetric functions, polarizations,
//!   Kronecker-delta forms, Newton tensors and Gårding cone tests.
//! * [`funcspace`]: globally defined polynomial test functions with analytic
//!   Hessians and seeded generators of admissible functions.
//! * [`quadrature`] and [`energy`]: Hessian energy integrals.
//! * [`verify`]: seeded verification suites with margin reports.
//! * [`cli`]: the `khessian` command-line interface.

pub mod cli;
pub mod energy;
pub mod error;
pub mod funcspace;
pub mod quadrature;
pub mod symfun;
pub mod verify;

pub use error::{Error, Result};
