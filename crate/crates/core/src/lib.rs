//! Numerical toolkit for Hamilton-Jacobi-Bellman equations with coinvariant
//! derivatives, arising from Bolza optimal control of systems with a single
//! discrete delay.
//!
//! The state of such a system at time `t` is a pair `(z, w)`: the current
//! vector `z = x(t)` and the history `w(ξ) = x(t + ξ)`, `ξ ∈ [-h, 0)`, a
//! piecewise-continuous function. Everything here works pointwise on that
//! state space:
//!
//! - [`histories`]: the uniform time grid, piecewise-continuous histories with
//!   node-aligned jumps, trajectories and their segments.
//! - [`problem`]: dynamics families, costs, the control set, the Hamiltonian
//!   and the a-priori constants of the growth and Lipschitz estimates.
//! - [`integrator`]: Heun stepping of the controlled delay equation and of
//!   selections of the characteristic inclusion.
//! - [`value`]: upper estimates of the value functional by control
//!   enumeration, dynamic-programming residuals and envelope functionals.
//! - [`calculus`]: directional derivatives, sub/superdifferentials, the
//!   comparison functional `μ` and the mean-value-inequality search.
//! - [`solutions`]: minimax, directional-derivative and viscosity checks.
//! - [`feedback`]: closed-loop control synthesis from a candidate functional.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, the CLI and
//! any threading live in the companion `hjbd` crate.

#![no_std]
// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

extern crate alloc;

pub mod calculus;
pub mod error;
pub mod feedback;
pub mod histories;
pub mod integrator;
pub mod math;
pub mod problem;
pub mod solutions;
pub mod value;

pub use error::{Error, Result};
pub use histories::{History, Interpolation, TimeGrid, Trajectory};
pub use problem::{ControlSet, ProblemSpec};
