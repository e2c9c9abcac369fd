//! Shared numerical primitives: grids with trapezoidal quadrature weights,
//! dense matrices with LU solving and condition estimation, and eigenvalue
//! computation.

mod eigen;
mod grid;
mod matrix;

use std::sync::Arc;

pub use eigen::eigenvalues;
pub use grid::Grid;
pub use matrix::{solve_dense, DenseMatrix, LuFactors};

/// Real-valued kernel on `(t, h)` pairs. Kernels with a jump across the
/// diagonal `h = t` should return the mean of their one-sided limits at
/// coincident arguments; quadrature sums read the diagonal value as-is.
pub type KernelFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Real-valued function of time.
pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub fn kernel_fn(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> KernelFn {
    Arc::new(f)
}

pub fn time_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> TimeFn {
    Arc::new(f)
}

/// Constant function of time.
pub fn constant_fn(value: f64) -> TimeFn {
    Arc::new(move |_| value)
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular matrix: pivot {pivot:.3e} below threshold {threshold:.3e}")]
    SingularMatrix { pivot: f64, threshold: f64 },
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
}
