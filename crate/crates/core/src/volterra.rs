//! Volterra integral equations of the second kind,
//! `phi(t) = lambda * int_a^t k(t,h) phi(h) dh + q(t)`,
//! solved by successive approximations and by a node-by-node marching
//! scheme that serves as an independent cross-check.

use crate::numcore::{Grid, KernelFn, TimeFn};

/// Default stopping tolerance on the max-norm change between iterates.
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate marching step at node {node}: diagonal factor {factor:.3e}")]
    DegenerateStep { node: usize, factor: f64 },
    #[error("iterates became non-finite at iteration {iteration}")]
    NonFinite { iteration: usize },
}

/// Scalar Volterra problem of the second kind on `t >= lower`.
#[derive(Clone)]
pub struct VolterraProblem {
    pub lower: f64,
    pub kernel: KernelFn,
    pub free_term: TimeFn,
    pub lambda: f64,
}

/// Coupled system of Volterra equations sharing one spectral parameter.
#[derive(Clone)]
pub struct VolterraSystem {
    pub lower: f64,
    pub kernels: Vec<Vec<KernelFn>>,
    pub free_terms: Vec<TimeFn>,
    pub lambda: f64,
}

impl VolterraSystem {
    pub fn dim(&self) -> usize {
        self.free_terms.len()
    }

    fn validate(&self) -> Result<(), Error> {
        let n = self.free_terms.len();
        if self.kernels.len() != n || self.kernels.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidArgument(
                "kernel table must be square and match the free-term count".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of an iterative solve. `converged` implies `final_residual`
/// is at or below the requested tolerance.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl SolverReport {
    pub fn direct(residual: f64) -> Self {
        SolverReport {
            iterations: 1,
            final_residual: residual,
            converged: true,
            warnings: Vec::new(),
        }
    }
}

fn check_grid(lower: f64, grid: &Grid, tol: f64) -> Result<(), Error> {
    let scale = lower.abs().max(grid.upper().abs()).max(1.0);
    if (grid.lower() - lower).abs() > 1e-12 * scale {
        return Err(Error::InvalidArgument(format!(
            "grid starts at {} but the problem starts at {}",
            grid.lower(),
            lower
        )));
    }
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    Ok(())
}

/// Successive approximations from the zero initial iterate. Returns the
/// samples together with a report; exhausting `max_iter` is reported
/// in-band via `converged = false`.
pub fn solve_picard(
    problem: &VolterraProblem,
    grid: &Grid,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolverReport), Error> {
    check_grid(problem.lower, grid, tol)?;
    let nodes = grid.nodes();
    let n = nodes.len();
    let q: Vec<f64> = nodes.iter().map(|&t| (problem.free_term)(t)).collect();
    let mut phi = vec![0.0; n];
    let mut diff = f64::INFINITY;
    for iteration in 1..=max_iter {
        let mut next = vec![0.0; n];
        for i in 0..n {
            let t = nodes[i];
            let mut acc = 0.0;
            for j in 0..=i {
                let w = grid.prefix_weight(i, j);
                if w != 0.0 {
                    acc += w * (problem.kernel)(t, nodes[j]) * phi[j];
                }
            }
            next[i] = problem.lambda * acc + q[i];
        }
        diff = phi
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        phi = next;
        if !diff.is_finite() {
            return Err(Error::NonFinite { iteration });
        }
        if diff <= tol {
            return Ok((
                phi,
                SolverReport {
                    iterations: iteration,
                    final_residual: diff,
                    converged: true,
                    warnings: Vec::new(),
                },
            ));
        }
    }
    Ok((
        phi,
        SolverReport {
            iterations: max_iter,
            final_residual: diff,
            converged: false,
            warnings: vec![format!(
                "successive approximations stopped after {max_iter} iterations with change {diff:.3e}"
            )],
        },
    ))
}

/// Node-by-node solve of the same discretized equation: at each node the
/// diagonal unknown is isolated and solved for directly.
pub fn solve_marching(problem: &VolterraProblem, grid: &Grid) -> Result<Vec<f64>, Error> {
    check_grid(problem.lower, grid, 1.0)?;
    let nodes = grid.nodes();
    let n = nodes.len();
    let mut phi = vec![0.0; n];
    phi[0] = (problem.free_term)(nodes[0]);
    for i in 1..n {
        let t = nodes[i];
        let mut acc = 0.0;
        for j in 0..i {
            acc += grid.prefix_weight(i, j) * (problem.kernel)(t, nodes[j]) * phi[j];
        }
        let diag = 1.0 - problem.lambda * grid.prefix_weight(i, i) * (problem.kernel)(t, t);
        if diag.abs() <= 1e-12 {
            return Err(Error::DegenerateStep {
                node: i,
                factor: diag,
            });
        }
        phi[i] = ((problem.free_term)(t) + problem.lambda * acc) / diag;
    }
    Ok(phi)
}

/// Simultaneous successive approximations for a coupled system, all
/// components starting from zero.
pub fn solve_system_picard(
    system: &VolterraSystem,
    grid: &Grid,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<Vec<f64>>, SolverReport), Error> {
    system.validate()?;
    check_grid(system.lower, grid, tol)?;
    let nodes = grid.nodes();
    let nn = nodes.len();
    let dim = system.dim();
    let q: Vec<Vec<f64>> = system
        .free_terms
        .iter()
        .map(|f| nodes.iter().map(|&t| f(t)).collect())
        .collect();
    let mut phi = vec![vec![0.0; nn]; dim];
    let mut diff = f64::INFINITY;
    for iteration in 1..=max_iter {
        let mut next = vec![vec![0.0; nn]; dim];
        for i in 0..dim {
            for k in 0..nn {
                let t = nodes[k];
                let mut acc = 0.0;
                for j in 0..dim {
                    let kernel = &system.kernels[i][j];
                    let mut comp = 0.0;
                    for m in 0..=k {
                        let w = grid.prefix_weight(k, m);
                        if w != 0.0 {
                            comp += w * kernel(t, nodes[m]) * phi[j][m];
                        }
                    }
                    acc += comp;
                }
                next[i][k] = system.lambda * acc + q[i][k];
            }
        }
        diff = phi
            .iter()
            .flatten()
            .zip(next.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        phi = next;
        if !diff.is_finite() {
            return Err(Error::NonFinite { iteration });
        }
        if diff <= tol {
            return Ok((
                phi,
                SolverReport {
                    iterations: iteration,
                    final_residual: diff,
                    converged: true,
                    warnings: Vec::new(),
                },
            ));
        }
    }
    Ok((
        phi,
        SolverReport {
            iterations: max_iter,
            final_residual: diff,
            converged: false,
            warnings: vec![format!(
                "system iteration stopped after {max_iter} iterations with change {diff:.3e}"
            )],
        },
    ))
}
