//! Numerical library for macroeconomic dynamics built on integral equations
//! of the second kind.
//!
//! The models covered are Harrod-style growth (exponential, rational-growth
//! with a finite forecast horizon, and the discrete geometric-progression
//! form), the Phillips multiplier/accelerator model with time-dependent
//! coefficients, and multi-participant price-balance dynamics. Initial-value
//! problems reduce to Volterra equations solved by successive approximations;
//! the forecasting boundary-value problem reduces to a stacked Fredholm
//! equation solved by the Nystrom method, with a discrete resolvent for
//! repeated solves under varied free terms.

pub mod balance;
pub mod diagnostics;
pub mod fredholm;
pub mod harrod;
pub mod numcore;
pub mod phillips;
pub mod volterra;

pub use numcore::{kernel_fn, time_fn, DenseMatrix, Grid, KernelFn, TimeFn};
pub use volterra::SolverReport;
