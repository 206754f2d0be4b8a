//! Bayesian optimization for expensive black-box objectives over mixed
//! continuous, integer and ordered-choice domains.
//!
//! The crate is `no_std` (it needs `alloc`) and carries every numerical piece
//! of the loop:
//!
//! * [`space`]: parameter definitions, the unit-cube bijection and integer rounding.
//! * [`sobol`]: a Sobol' low-discrepancy generator (Joe–Kuo direction numbers).
//! * [`gp`]: Gaussian-process regression with RBF and half-integer Matérn kernels.
//! * [`acquisition`]: EI, PI, UCB with analytic gradients and Monte-Carlo q-EI.
//! * [`optimizer`]: Sobol'-seeded multi-start projected gradient ascent.
//! * [`engine`]: the suggest/complete loop with duplicate handling, zoom and restart.
//! * [`bench`]: Rosenbrock and a synthetic mixed-integer tuning problem.
//!
//! File formats and the command-line interface live in the `bayesopt` crate.
#![cfg_attr(not(test), no_std)]
// Index loops read closer to the matrix algebra; `!(x > 0.0)` also rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod acquisition;
pub mod bench;
pub mod engine;
mod error;
pub mod gp;
pub mod linalg;
pub mod normal;
pub mod optimizer;
pub mod sobol;
pub mod space;

pub use error::{Error, Result};
