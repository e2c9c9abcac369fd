//! Fredholm integral equations of the second kind,
//! `Phi(t) = lambda * int_a^b K(t,h) Phi(h) dh + Q(t)`,
//! discretized by the Nystrom method on trapezoid grids. Includes resolvent
//! construction for repeated solves under varied free terms, characteristic
//! numbers of the discretized kernel, and the block-stacking map that fuses
//! an n-component system on the unit interval into one equation on `[0, n]`.

use num_complex::Complex64;

use crate::numcore::{self, DenseMatrix, Grid, KernelFn, LuFactors, TimeFn};
use crate::volterra::SolverReport;

/// Discrete operators with a condition estimate beyond this are treated as
/// numerically characteristic.
pub const CONDITION_LIMIT: f64 = 1e10;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(
        "lambda is numerically characteristic for this kernel and grid \
         (condition estimate {condition:.3e})"
    )]
    CharacteristicLambda { condition: f64 },
    #[error("eigenvalue computation failed to converge")]
    NoConvergence,
}

impl From<numcore::Error> for Error {
    fn from(e: numcore::Error) -> Self {
        match e {
            numcore::Error::SingularMatrix { .. } => Error::CharacteristicLambda {
                condition: f64::INFINITY,
            },
            numcore::Error::InvalidArgument(msg) => Error::InvalidArgument(msg),
            numcore::Error::NoConvergence => Error::NoConvergence,
        }
    }
}

/// Scalar Fredholm problem of the second kind on `[lower, upper]`.
#[derive(Clone)]
pub struct FredholmProblem {
    pub lower: f64,
    pub upper: f64,
    pub kernel: KernelFn,
    pub free_term: TimeFn,
    pub lambda: f64,
}

/// An n-component Fredholm system on the unit interval: kernels `k_ij` on
/// the unit square and free terms `q_i`, sharing one spectral parameter.
#[derive(Clone)]
pub struct FredholmSystem {
    pub kernels: Vec<Vec<KernelFn>>,
    pub free_terms: Vec<TimeFn>,
    pub lambda: f64,
}

impl FredholmSystem {
    pub fn dim(&self) -> usize {
        self.free_terms.len()
    }

    fn validate(&self) -> Result<(), Error> {
        let n = self.free_terms.len();
        if n == 0 {
            return Err(Error::InvalidArgument("system needs at least one component".into()));
        }
        if self.kernels.len() != n || self.kernels.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidArgument(
                "kernel table must be square and match the free-term count".into(),
            ));
        }
        Ok(())
    }
}

fn check_interval(problem: &FredholmProblem, grid: &Grid) -> Result<(), Error> {
    let scale = problem.lower.abs().max(problem.upper.abs()).max(1.0);
    if (grid.lower() - problem.lower).abs() > 1e-12 * scale
        || (grid.upper() - problem.upper).abs() > 1e-12 * scale
    {
        return Err(Error::InvalidArgument(format!(
            "grid [{}, {}] does not match the problem interval [{}, {}]",
            grid.lower(),
            grid.upper(),
            problem.lower,
            problem.upper
        )));
    }
    Ok(())
}

/// Weighted kernel matrix `A[i][j] = w_j K(t_i, t_j)`; the Nystrom
/// discretization of the integral operator.
pub fn operator_matrix(kernel: &KernelFn, grid: &Grid) -> DenseMatrix {
    let nodes = grid.nodes();
    let weights = grid.weights();
    DenseMatrix::from_fn(nodes.len(), |i, j| weights[j] * kernel(nodes[i], nodes[j]))
}

fn factor_discrete(kernel: &KernelFn, lambda: f64, grid: &Grid) -> Result<LuFactors, Error> {
    let n = grid.len();
    let a = operator_matrix(kernel, grid);
    let mut m = DenseMatrix::from_fn(n, |i, j| -lambda * a.get(i, j));
    for i in 0..n {
        m.set(i, i, m.get(i, i) + 1.0);
    }
    let lu = LuFactors::factor(&m)?;
    let condition = lu.condition_inf_estimate();
    if condition > CONDITION_LIMIT {
        return Err(Error::CharacteristicLambda { condition });
    }
    Ok(lu)
}

/// Direct Nystrom solve: `(I - lambda W K) Phi = Q` at the nodes.
pub fn nystrom_solve(
    problem: &FredholmProblem,
    grid: &Grid,
) -> Result<(Vec<f64>, SolverReport), Error> {
    check_interval(problem, grid)?;
    let nodes = grid.nodes();
    let q: Vec<f64> = nodes.iter().map(|&t| (problem.free_term)(t)).collect();
    let lu = factor_discrete(&problem.kernel, problem.lambda, grid)?;
    let phi = lu.solve(&q);
    // residual of the discrete equation, relative to the free term
    let weights = grid.weights();
    let q_scale = q.iter().map(|v| v.abs()).fold(f64::MIN_POSITIVE, f64::max);
    let mut residual = 0.0_f64;
    for i in 0..nodes.len() {
        let mut acc = 0.0;
        for j in 0..nodes.len() {
            acc += weights[j] * (problem.kernel)(nodes[i], nodes[j]) * phi[j];
        }
        residual = residual.max((phi[i] - problem.lambda * acc - q[i]).abs());
    }
    Ok((phi, SolverReport::direct(residual / q_scale)))
}

/// Neumann-series summation `Phi_{s+1} = Q + lambda A Phi_s`; the
/// cross-check path when the operator is contractive.
pub fn solve_neumann(
    problem: &FredholmProblem,
    grid: &Grid,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolverReport), Error> {
    check_interval(problem, grid)?;
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let a = operator_matrix(&problem.kernel, grid);
    let q: Vec<f64> = grid.nodes().iter().map(|&t| (problem.free_term)(t)).collect();
    let mut phi = q.clone();
    let mut diff = f64::INFINITY;
    for iteration in 1..=max_iter {
        let ap = a.mul_vec(&phi);
        let next: Vec<f64> = q
            .iter()
            .zip(&ap)
            .map(|(qi, ai)| qi + problem.lambda * ai)
            .collect();
        diff = phi
            .iter()
            .zip(&next)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        phi = next;
        if !diff.is_finite() {
            return Err(Error::InvalidArgument(
                "Neumann iteration diverged to non-finite values".into(),
            ));
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
                "Neumann summation stopped after {max_iter} iterations with change {diff:.3e}"
            )],
        },
    ))
}

/// The `count` smallest-magnitude characteristic numbers `lambda_h = 1/mu_h`,
/// where `mu_h` runs over the nonzero eigenvalues of the weighted kernel
/// matrix. Fewer than `count` are returned when the discretized operator
/// has fewer nonzero eigenvalues.
pub fn characteristic_numbers(
    kernel: &KernelFn,
    grid: &Grid,
    count: usize,
) -> Result<Vec<Complex64>, Error> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    let a = operator_matrix(kernel, grid);
    let mu = numcore::eigenvalues(&a)?;
    let max_mag = mu.iter().map(|m| m.norm()).fold(0.0, f64::max);
    if max_mag == 0.0 {
        return Ok(Vec::new());
    }
    let mut lambdas: Vec<Complex64> = mu
        .into_iter()
        .filter(|m| m.norm() > 1e-12 * max_mag)
        .map(|m| m.finv())
        .collect();
    lambdas.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
    lambdas.truncate(count);
    Ok(lambdas)
}

/// Discrete resolvent table `R(t_i, h_j)` for a fixed kernel and lambda.
/// Solutions are recovered by `Phi = Q + lambda * quad(R * Q)`, so a single
/// factorization serves any number of free terms. The table is read-only;
/// sharing it across concurrent sweeps is safe.
pub struct DiscreteResolvent {
    grid: Grid,
    lambda: f64,
    table: Vec<f64>,
}

impl DiscreteResolvent {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.table[i * self.grid.len() + j]
    }

    /// Applies the resolvent representation to free-term samples.
    pub fn apply(&self, q: &[f64]) -> Result<Vec<f64>, Error> {
        let n = self.grid.len();
        if q.len() != n {
            return Err(Error::InvalidArgument(format!(
                "expected {} free-term samples, got {}",
                n,
                q.len()
            )));
        }
        let weights = self.grid.weights();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let row = &self.table[i * n..(i + 1) * n];
            let acc: f64 = row
                .iter()
                .zip(weights)
                .zip(q)
                .map(|((r, w), qq)| r * w * qq)
                .sum();
            out.push(q[i] + self.lambda * acc);
        }
        Ok(out)
    }
}

/// Builds the discrete resolvent by solving `(I - lambda W K)` against the
/// kernel columns.
pub fn build_resolvent(
    kernel: &KernelFn,
    lambda: f64,
    grid: &Grid,
) -> Result<DiscreteResolvent, Error> {
    let n = grid.len();
    let nodes = grid.nodes();
    let lu = factor_discrete(kernel, lambda, grid)?;
    let mut table = vec![0.0; n * n];
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| kernel(nodes[i], nodes[j])).collect();
        let r = lu.solve(&col);
        for i in 0..n {
            table[i * n + j] = r[i];
        }
    }
    Ok(DiscreteResolvent {
        grid: grid.clone(),
        lambda,
        table,
    })
}

/// Fuses an n-component system on `[0,1]` into a single problem on `[0, n]`:
/// block `(i, j)` of the stacked kernel restricts to `k_ij` under the index
/// shift, and the free term concatenates the `q_i`. Points at interior block
/// boundaries belong to the right block.
pub fn stack_system(system: &FredholmSystem) -> Result<FredholmProblem, Error> {
    system.validate()?;
    let n = system.dim();
    let kernels = system.kernels.clone();
    let free_terms = system.free_terms.clone();
    let split = move |t: f64| -> (usize, f64) {
        let i = (t.floor() as usize).min(n - 1);
        (i, t - i as f64)
    };
    let split_k = split;
    let kernel: KernelFn = std::sync::Arc::new(move |t, h| {
        let (i, tl) = split_k(t);
        let (j, hl) = split_k(h);
        kernels[i][j](tl, hl)
    });
    let free_term: TimeFn = std::sync::Arc::new(move |t| {
        let (i, tl) = split(t);
        free_terms[i](tl)
    });
    Ok(FredholmProblem {
        lower: 0.0,
        upper: n as f64,
        kernel,
        free_term,
        lambda: system.lambda,
    })
}

/// Splits samples on a `[0, n]` grid with `n * s` segments back into
/// per-component samples on the unit grid. Values at interior block
/// boundaries are owned by the right block, so for components before the
/// last the final sample is the neighbour's left-edge value.
pub fn unstack_samples(samples: &[f64], components: usize) -> Result<Vec<Vec<f64>>, Error> {
    if components == 0 || (samples.len() - 1) % components != 0 {
        return Err(Error::InvalidArgument(format!(
            "cannot split {} samples into {} blocks",
            samples.len(),
            components
        )));
    }
    let s = (samples.len() - 1) / components;
    Ok((0..components)
        .map(|i| samples[i * s..=(i + 1) * s].to_vec())
        .collect())
}

/// Weighted block operator matrix of a system: entry `((i,a),(j,b))` is
/// `w_b k_ij(t_a, t_b)`. The block discretization of the stacked kernel.
pub fn system_operator_matrix(system: &FredholmSystem, grid: &Grid) -> DenseMatrix {
    let n = system.dim();
    let nodes = grid.nodes();
    let weights = grid.weights();
    let nn = nodes.len();
    DenseMatrix::from_fn(n * nn, |row, col| {
        let (i, a) = (row / nn, row % nn);
        let (j, b) = (col / nn, col % nn);
        weights[b] * (system.kernels[i][j])(nodes[a], nodes[b])
    })
}

/// Discrete resolvent of a block system; one factorization reused across
/// any number of free-term variations.
pub struct SystemResolvent {
    grid: Grid,
    lambda: f64,
    components: usize,
    table: Vec<f64>,
}

impl SystemResolvent {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Applies `Phi = Q + lambda quad(R Q)` blockwise to per-component
    /// free-term samples.
    pub fn apply(&self, q: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, Error> {
        let nn = self.grid.len();
        if q.len() != self.components || q.iter().any(|col| col.len() != nn) {
            return Err(Error::InvalidArgument(format!(
                "expected {} components of {} samples each",
                self.components, nn
            )));
        }
        let weights = self.grid.weights();
        let dim = self.components * nn;
        let flat_q: Vec<f64> = q.iter().flatten().copied().collect();
        let mut out = vec![0.0; dim];
        for row in 0..dim {
            let table_row = &self.table[row * dim..(row + 1) * dim];
            let mut acc = 0.0;
            for col in 0..dim {
                acc += table_row[col] * weights[col % nn] * flat_q[col];
            }
            out[row] = flat_q[row] + self.lambda * acc;
        }
        Ok((0..self.components)
            .map(|i| out[i * nn..(i + 1) * nn].to_vec())
            .collect())
    }
}

/// Builds the block-system resolvent by solving the discrete operator
/// against the kernel columns.
pub fn build_system_resolvent(
    system: &FredholmSystem,
    grid: &Grid,
) -> Result<SystemResolvent, Error> {
    system.validate()?;
    let n = system.dim();
    let nodes = grid.nodes();
    let nn = nodes.len();
    let dim = n * nn;
    let a = system_operator_matrix(system, grid);
    let mut m = DenseMatrix::from_fn(dim, |r, c| -system.lambda * a.get(r, c));
    for i in 0..dim {
        m.set(i, i, m.get(i, i) + 1.0);
    }
    let lu = LuFactors::factor(&m)?;
    let condition = lu.condition_inf_estimate();
    if condition > CONDITION_LIMIT {
        return Err(Error::CharacteristicLambda { condition });
    }
    let mut table = vec![0.0; dim * dim];
    for col in 0..dim {
        let (j, b) = (col / nn, col % nn);
        let kernel_col: Vec<f64> = (0..dim)
            .map(|row| {
                let (i, aa) = (row / nn, row % nn);
                (system.kernels[i][j])(nodes[aa], nodes[b])
            })
            .collect();
        let r = lu.solve(&kernel_col);
        for row in 0..dim {
            table[row * dim + col] = r[row];
        }
    }
    Ok(SystemResolvent {
        grid: grid.clone(),
        lambda: system.lambda,
        components: n,
        table,
    })
}

/// Block Nystrom solve of the system on a unit-interval grid: one unknown
/// per component per node, block boundaries not shared. Serves as the
/// independent discretization against which the stacked route is checked.
pub fn nystrom_solve_system(
    system: &FredholmSystem,
    grid: &Grid,
) -> Result<(Vec<Vec<f64>>, SolverReport), Error> {
    system.validate()?;
    let n = system.dim();
    let nodes = grid.nodes();
    let weights = grid.weights();
    let nn = nodes.len();
    let dim = n * nn;
    let mut m = DenseMatrix::zeros(dim);
    for i in 0..n {
        for j in 0..n {
            let kernel = &system.kernels[i][j];
            for a in 0..nn {
                for b in 0..nn {
                    let mut v = -system.lambda * weights[b] * kernel(nodes[a], nodes[b]);
                    if i == j && a == b {
                        v += 1.0;
                    }
                    m.set(i * nn + a, j * nn + b, v);
                }
            }
        }
    }
    let mut q = Vec::with_capacity(dim);
    for i in 0..n {
        q.extend(nodes.iter().map(|&t| (system.free_terms[i])(t)));
    }
    let lu = LuFactors::factor(&m)?;
    let condition = lu.condition_inf_estimate();
    if condition > CONDITION_LIMIT {
        return Err(Error::CharacteristicLambda { condition });
    }
    let flat = lu.solve(&q);
    let back = m.mul_vec(&flat);
    let q_scale = q.iter().map(|v| v.abs()).fold(f64::MIN_POSITIVE, f64::max);
    let residual = back
        .iter()
        .zip(&q)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / q_scale;
    let phis = (0..n).map(|i| flat[i * nn..(i + 1) * nn].to_vec()).collect();
    Ok((phis, SolverReport::direct(residual)))
}
