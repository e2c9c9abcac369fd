//! Price-balance dynamics for a system of participants: static fixed-point
//! solves of `x = Ax + c`, the dynamic Cauchy problem as a coupled Volterra
//! system, the forecasting boundary-value problem as a stacked Fredholm
//! system, variational sweeps through a precomputed resolvent, and the
//! criticality check on the characteristic numbers nearest the Taylor
//! parameter.

use num_complex::Complex64;

use crate::fredholm::{self, FredholmProblem, FredholmSystem};
use crate::numcore::{self, DenseMatrix, Grid, KernelFn, TimeFn};
use crate::volterra::{self, SolverReport, VolterraSystem};

/// Spectral parameter produced by keeping three terms of the Taylor
/// expansion of the balance step. Hard-wired: the kernels and free terms
/// below are only valid at this order.
pub const TAYLOR_LAMBDA: f64 = 2.0;

/// Criticality warning threshold on the relative gap `|lambda_h - 2| / 2`.
pub const CRITICAL_GAP: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("iteration requires a contractive matrix, inf-norm is {norm}")]
    NotContractive { norm: f64 },
    #[error(transparent)]
    Volterra(#[from] volterra::Error),
    #[error(transparent)]
    Fredholm(#[from] fredholm::Error),
    #[error(transparent)]
    Core(#[from] numcore::Error),
}

/// Participants' cost shares `a_ij(t)` and own contributions `c_i(t)` on the
/// dimensionless unit interval, with `step_length` recording how many time
/// units one dimensionless unit represents.
#[derive(Clone)]
pub struct BalanceSystem {
    coefficients: Vec<Vec<TimeFn>>,
    costs: Vec<TimeFn>,
    step_length: f64,
}

impl BalanceSystem {
    pub fn new(
        coefficients: Vec<Vec<TimeFn>>,
        costs: Vec<TimeFn>,
        step_length: f64,
    ) -> Result<Self, Error> {
        let n = costs.len();
        if n == 0 {
            return Err(Error::InvalidArgument(
                "system needs at least one participant".into(),
            ));
        }
        if coefficients.len() != n || coefficients.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidArgument(format!(
                "coefficient table must be {n} x {n} to match the cost vector"
            )));
        }
        if !step_length.is_finite() || step_length <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "step length must be positive, got {step_length}"
            )));
        }
        Ok(BalanceSystem {
            coefficients,
            costs,
            step_length,
        })
    }

    /// System with time-constant coefficients and costs.
    pub fn constant(a: &DenseMatrix, c: &[f64], step_length: f64) -> Result<Self, Error> {
        if c.len() != a.dim() {
            return Err(Error::InvalidArgument(format!(
                "cost vector length {} does not match matrix dimension {}",
                c.len(),
                a.dim()
            )));
        }
        let coefficients = (0..a.dim())
            .map(|i| {
                (0..a.dim())
                    .map(|j| {
                        let v = a.get(i, j);
                        numcore::constant_fn(v)
                    })
                    .collect()
            })
            .collect();
        let costs = c.iter().map(|&v| numcore::constant_fn(v)).collect();
        BalanceSystem::new(coefficients, costs, step_length)
    }

    pub fn participants(&self) -> usize {
        self.costs.len()
    }

    pub fn step_length(&self) -> f64 {
        self.step_length
    }

    pub fn coefficient(&self, i: usize, j: usize) -> &TimeFn {
        &self.coefficients[i][j]
    }

    pub fn cost(&self, i: usize) -> &TimeFn {
        &self.costs[i]
    }

    /// Coefficient matrix sampled at one time point.
    pub fn matrix_at(&self, t: f64) -> DenseMatrix {
        DenseMatrix::from_fn(self.participants(), |i, j| (self.coefficients[i][j])(t))
    }

    pub fn costs_at(&self, t: f64) -> Vec<f64> {
        self.costs.iter().map(|c| c(t)).collect()
    }
}

/// Initial prices and price rates for the Cauchy problem.
#[derive(Debug, Clone)]
pub struct CauchyData {
    pub p: Vec<f64>,
    pub pp: Vec<f64>,
}

/// Initial and terminal prices for the forecasting boundary-value problem.
#[derive(Debug, Clone)]
pub struct ForecastData {
    pub p: Vec<f64>,
    pub r: Vec<f64>,
}

fn check_len(name: &str, len: usize, n: usize) -> Result<(), Error> {
    if len != n {
        return Err(Error::InvalidArgument(format!(
            "{name} has length {len}, expected {n}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// static solves
// ---------------------------------------------------------------------------

/// Fixed point of `x = Ax + c` by plain successive approximations from zero.
/// Requires `inf_norm(A) < 1`; convergence is then geometric with ratio at
/// most that norm.
pub fn static_solve_contractive(
    a: &DenseMatrix,
    c: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolverReport), Error> {
    check_len("cost vector", c.len(), a.dim())?;
    let norm = a.inf_norm();
    if norm >= 1.0 {
        return Err(Error::NotContractive { norm });
    }
    let mut x = vec![0.0; c.len()];
    let mut diff = f64::INFINITY;
    for iteration in 1..=max_iter {
        let ax = a.mul_vec(&x);
        let next: Vec<f64> = ax.iter().zip(c).map(|(v, ci)| v + ci).collect();
        diff = x
            .iter()
            .zip(&next)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        x = next;
        if diff <= tol {
            return Ok((
                x,
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
        x,
        SolverReport {
            iterations: max_iter,
            final_residual: diff,
            converged: false,
            warnings: vec![format!(
                "contractive iteration stopped after {max_iter} iterations with change {diff:.3e}"
            )],
        },
    ))
}

/// Relaxed normal-equations iteration `x <- x - alpha B'(Bx - c)` with
/// `B = I - A` and `alpha = 1 / inf_norm(B'B)`, which lies inside the
/// admissible `(0, 2/||B'B||)` range. Converges for any invertible `B`
/// regardless of contractivity; a singular `B` is reported in-band through
/// a non-vanishing residual.
pub fn static_solve_general(
    a: &DenseMatrix,
    c: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolverReport), Error> {
    check_len("cost vector", c.len(), a.dim())?;
    let n = a.dim();
    let mut b = DenseMatrix::from_fn(n, |i, j| -a.get(i, j));
    for i in 0..n {
        b.set(i, i, b.get(i, i) + 1.0);
    }
    let bt = b.transpose();
    let btb = bt.mat_mul(&b);
    let btb_norm = btb.inf_norm();
    let alpha = if btb_norm > 0.0 { 1.0 / btb_norm } else { 0.0 };
    let scale = c.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let mut x = vec![0.0; n];
    let mut residual_norm = f64::INFINITY;
    for iteration in 1..=max_iter {
        let bx = b.mul_vec(&x);
        let resid: Vec<f64> = bx.iter().zip(c).map(|(v, ci)| v - ci).collect();
        residual_norm = resid.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if residual_norm <= tol * scale {
            return Ok((
                x,
                SolverReport {
                    iterations: iteration,
                    final_residual: residual_norm,
                    converged: true,
                    warnings: Vec::new(),
                },
            ));
        }
        let grad = bt.mul_vec(&resid);
        for (xi, gi) in x.iter_mut().zip(&grad) {
            *xi -= alpha * gi;
        }
    }
    Ok((
        x,
        SolverReport {
            iterations: max_iter,
            final_residual: residual_norm,
            converged: false,
            warnings: vec![format!(
                "general iteration stopped after {max_iter} iterations with residual {residual_norm:.3e}"
            )],
        },
    ))
}

// ---------------------------------------------------------------------------
// Cauchy problem
// ---------------------------------------------------------------------------

/// Volterra system for the Cauchy problem: kernels
/// `k_ij(t,h) = a_ij(h)(t-h)` off the diagonal and
/// `(a_ii(h) - 1)(t-h) - 1` on it, free terms
/// `q_i(t) = 2 [ sum_j a_ij(t)(p'_j t + p_j) + c_i(t) - p'_i(1+t) - p_i ]`,
/// with the integral part carrying the factored Taylor parameter 2.
pub fn build_cauchy_volterra(
    system: &BalanceSystem,
    data: &CauchyData,
) -> Result<VolterraSystem, Error> {
    let n = system.participants();
    check_len("initial prices p", data.p.len(), n)?;
    check_len("initial rates p'", data.pp.len(), n)?;
    let mut kernels: Vec<Vec<KernelFn>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let a = system.coefficients[i][j].clone();
            let kernel: KernelFn = if i == j {
                std::sync::Arc::new(move |t, h| (a(h) - 1.0) * (t - h) - 1.0)
            } else {
                std::sync::Arc::new(move |t, h| a(h) * (t - h))
            };
            row.push(kernel);
        }
        kernels.push(row);
    }
    let mut free_terms: Vec<TimeFn> = Vec::with_capacity(n);
    for i in 0..n {
        let coeffs: Vec<TimeFn> = system.coefficients[i].clone();
        let cost = system.costs[i].clone();
        let p = data.p.clone();
        let pp = data.pp.clone();
        free_terms.push(std::sync::Arc::new(move |t| {
            let mut acc = 0.0;
            for (j, a) in coeffs.iter().enumerate() {
                acc += a(t) * (pp[j] * t + p[j]);
            }
            TAYLOR_LAMBDA * (acc + cost(t) - pp[i] * (1.0 + t) - p[i])
        }));
    }
    Ok(VolterraSystem {
        lower: 0.0,
        kernels,
        free_terms,
        lambda: TAYLOR_LAMBDA,
    })
}

/// Solves the Cauchy problem on `[0,1]` and reconstructs the prices
/// `x_i(t) = int_0^t (t-h) phi_i(h) dh + p'_i t + p_i`.
pub fn simulate_cauchy(
    system: &BalanceSystem,
    data: &CauchyData,
    grid: &Grid,
) -> Result<(Vec<Vec<f64>>, SolverReport), Error> {
    check_unit_grid(grid)?;
    let volterra_system = build_cauchy_volterra(system, data)?;
    let (phis, report) = volterra::solve_system_picard(
        &volterra_system,
        grid,
        volterra::DEFAULT_TOL,
        volterra::DEFAULT_MAX_ITER,
    )?;
    let nodes = grid.nodes();
    let mut trajectories = Vec::with_capacity(system.participants());
    for (i, phi) in phis.iter().enumerate() {
        let mut x = Vec::with_capacity(nodes.len());
        for k in 0..nodes.len() {
            let t = nodes[k];
            let mut acc = 0.0;
            for j in 0..=k {
                let w = grid.prefix_weight(k, j);
                if w != 0.0 {
                    acc += w * (t - nodes[j]) * phi[j];
                }
            }
            x.push(acc + data.pp[i] * t + data.p[i]);
        }
        trajectories.push(x);
    }
    Ok((trajectories, report))
}

// ---------------------------------------------------------------------------
// forecasting boundary-value problem
// ---------------------------------------------------------------------------

/// Dirichlet Green kernel of the unit interval: `h(t-1)` below the diagonal,
/// `t(h-1)` above; continuous across it.
fn green(t: f64, h: f64) -> f64 {
    if h <= t {
        h * (t - 1.0)
    } else {
        t * (h - 1.0)
    }
}

/// Derivative companion of the Green kernel: `h` below the diagonal,
/// `h - 1` above. The unit jump across `h = t` is represented by the mean
/// of the one-sided limits at coincident arguments, which keeps the
/// trapezoid sums second-order accurate.
fn green_slope(t: f64, h: f64) -> f64 {
    if h < t {
        h
    } else if h > t {
        h - 1.0
    } else {
        h - 0.5
    }
}

/// Fredholm kernels of the forecast problem: `a_ij(h) G(t,h)` off the
/// diagonal and `(a_ii(h) - 1) G(t,h) - H(t,h)` on it.
pub fn forecast_kernels(system: &BalanceSystem) -> Vec<Vec<KernelFn>> {
    let n = system.participants();
    let mut kernels: Vec<Vec<KernelFn>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let a = system.coefficients[i][j].clone();
            let kernel: KernelFn = if i == j {
                std::sync::Arc::new(move |t, h| (a(h) - 1.0) * green(t, h) - green_slope(t, h))
            } else {
                std::sync::Arc::new(move |t, h| a(h) * green(t, h))
            };
            row.push(kernel);
        }
        kernels.push(row);
    }
    kernels
}

/// Free terms of the forecast problem,
/// `q_i(t) = 2 [ sum_j a_ij(t)((r_j - p_j) t + p_j) + c_i(t)
///              - (r_i - p_i)(1 + t) - p_i ]`.
pub fn forecast_free_terms(system: &BalanceSystem, data: &ForecastData) -> Vec<TimeFn> {
    let n = system.participants();
    let mut free_terms: Vec<TimeFn> = Vec::with_capacity(n);
    for i in 0..n {
        let coeffs: Vec<TimeFn> = system.coefficients[i].clone();
        let cost = system.costs[i].clone();
        let p = data.p.clone();
        let r = data.r.clone();
        free_terms.push(std::sync::Arc::new(move |t| {
            let mut acc = 0.0;
            for (j, a) in coeffs.iter().enumerate() {
                acc += a(t) * ((r[j] - p[j]) * t + p[j]);
            }
            TAYLOR_LAMBDA * (acc + cost(t) - (r[i] - p[i]) * (1.0 + t) - p[i])
        }));
    }
    free_terms
}

/// The forecast system on the unit interval, prior to stacking.
pub fn build_forecast_system(
    system: &BalanceSystem,
    data: &ForecastData,
) -> Result<FredholmSystem, Error> {
    let n = system.participants();
    check_len("initial prices p", data.p.len(), n)?;
    check_len("terminal prices r", data.r.len(), n)?;
    Ok(FredholmSystem {
        kernels: forecast_kernels(system),
        free_terms: forecast_free_terms(system, data),
        lambda: TAYLOR_LAMBDA,
    })
}

/// The forecast problem fused into a single Fredholm equation on `[0, n]`.
pub fn build_forecast_fredholm(
    system: &BalanceSystem,
    data: &ForecastData,
) -> Result<FredholmProblem, Error> {
    Ok(fredholm::stack_system(&build_forecast_system(system, data)?)?)
}

fn check_unit_grid(grid: &Grid) -> Result<(), Error> {
    if grid.lower() != 0.0 || (grid.upper() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "balance dynamics live on [0, 1], grid covers [{}, {}]",
            grid.lower(),
            grid.upper()
        )));
    }
    Ok(())
}

fn reconstruct_forecast(
    grid: &Grid,
    phi: &[f64],
    p: f64,
    r: f64,
) -> Result<Vec<f64>, Error> {
    let nodes = grid.nodes();
    let slope_samples: Vec<f64> = nodes
        .iter()
        .zip(phi)
        .map(|(&h, &f)| (1.0 - h) * f)
        .collect();
    let full = grid.quad(&slope_samples)?;
    let mut x = Vec::with_capacity(nodes.len());
    for k in 0..nodes.len() {
        let t = nodes[k];
        let mut acc = 0.0;
        for j in 0..=k {
            let w = grid.prefix_weight(k, j);
            if w != 0.0 {
                acc += w * (t - nodes[j]) * phi[j];
            }
        }
        x.push(acc - t * full + (r - p) * t + p);
    }
    Ok(x)
}

/// Solves the forecasting boundary-value problem on the unit grid and
/// reconstructs the prices per Green's representation,
/// `x_i(t) = int_0^t (t-h) phi_i dh - t int_0^1 (1-h) phi_i dh
///           + (r_i - p_i) t + p_i`,
/// so the boundary values are met at machine precision by construction.
///
/// The stacked equation is discretized blockwise: each component keeps its
/// own copy of the interface nodes, the block form of the same fused system.
pub fn forecast(
    system: &BalanceSystem,
    data: &ForecastData,
    grid: &Grid,
) -> Result<(Vec<Vec<f64>>, SolverReport), Error> {
    check_unit_grid(grid)?;
    let fredholm_system = build_forecast_system(system, data)?;
    let (phis, report) = fredholm::nystrom_solve_system(&fredholm_system, grid)?;
    let mut trajectories = Vec::with_capacity(system.participants());
    for (i, phi) in phis.iter().enumerate() {
        trajectories.push(reconstruct_forecast(grid, phi, data.p[i], data.r[i])?);
    }
    Ok((trajectories, report))
}

// ---------------------------------------------------------------------------
// variational sweeps
// ---------------------------------------------------------------------------

/// Perturbation of the forecast inputs: additive cost deltas and terminal
/// price deltas.
#[derive(Clone)]
pub struct SweepVariant {
    pub cost_delta: Vec<TimeFn>,
    pub terminal_delta: Vec<f64>,
}

impl SweepVariant {
    pub fn zero(n: usize) -> Self {
        SweepVariant {
            cost_delta: (0..n).map(|_| numcore::constant_fn(0.0)).collect(),
            terminal_delta: vec![0.0; n],
        }
    }
}

fn perturbed_inputs(
    system: &BalanceSystem,
    base: &ForecastData,
    variant: &SweepVariant,
) -> Result<(BalanceSystem, ForecastData), Error> {
    let n = system.participants();
    check_len("variant cost delta", variant.cost_delta.len(), n)?;
    check_len("variant terminal delta", variant.terminal_delta.len(), n)?;
    let costs: Vec<TimeFn> = system
        .costs
        .iter()
        .zip(&variant.cost_delta)
        .map(|(c, d)| {
            let c = c.clone();
            let d = d.clone();
            let f: TimeFn = std::sync::Arc::new(move |t| c(t) + d(t));
            f
        })
        .collect();
    let perturbed = BalanceSystem::new(system.coefficients.clone(), costs, system.step_length)?;
    let data = ForecastData {
        p: base.p.clone(),
        r: base
            .r
            .iter()
            .zip(&variant.terminal_delta)
            .map(|(r, d)| r + d)
            .collect(),
    };
    Ok((perturbed, data))
}

/// Solves the forecast problem repeatedly under free-term variations,
/// building the resolvent of the (fixed) kernel once and applying
/// `Phi = Q + lambda quad(R Q)` per variant.
pub fn variational_sweep(
    system: &BalanceSystem,
    base: &ForecastData,
    variants: &[SweepVariant],
    grid: &Grid,
) -> Result<Vec<Vec<Vec<f64>>>, Error> {
    check_unit_grid(grid)?;
    let n = system.participants();
    check_len("initial prices p", base.p.len(), n)?;
    check_len("terminal prices r", base.r.len(), n)?;
    if variants.is_empty() {
        return Ok(Vec::new());
    }
    let kernels = forecast_kernels(system);
    let base_system = FredholmSystem {
        kernels,
        free_terms: forecast_free_terms(system, base),
        lambda: TAYLOR_LAMBDA,
    };
    let resolvent = fredholm::build_system_resolvent(&base_system, grid)?;
    let nodes = grid.nodes();
    let mut out = Vec::with_capacity(variants.len());
    for variant in variants {
        let (perturbed, data) = perturbed_inputs(system, base, variant)?;
        let free_terms = forecast_free_terms(&perturbed, &data);
        let q: Vec<Vec<f64>> = free_terms
            .iter()
            .map(|f| nodes.iter().map(|&t| f(t)).collect())
            .collect();
        let phis = resolvent.apply(&q)?;
        let mut trajectories = Vec::with_capacity(n);
        for (i, phi) in phis.iter().enumerate() {
            trajectories.push(reconstruct_forecast(grid, phi, data.p[i], data.r[i])?);
        }
        out.push(trajectories);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// criticality
// ---------------------------------------------------------------------------

/// One characteristic number with its relative distance from the Taylor
/// parameter.
#[derive(Debug, Clone)]
pub struct CriticalityEntry {
    pub value: Complex64,
    pub gap: f64,
}

/// The `count` characteristic numbers of the stacked forecast kernel
/// nearest the Taylor parameter, sorted by relative gap.
#[derive(Debug, Clone)]
pub struct CriticalityReport {
    pub reference: f64,
    pub entries: Vec<CriticalityEntry>,
    pub warning: bool,
}

impl CriticalityReport {
    pub fn min_gap(&self) -> Option<f64> {
        self.entries.first().map(|e| e.gap)
    }
}

/// Computes the characteristic numbers of the stacked forecast kernel on
/// the given unit grid (block discretization) and reports the `count`
/// nearest `lambda = 2`, flagging gaps under five percent.
pub fn criticality_check(
    system: &BalanceSystem,
    grid: &Grid,
    count: usize,
) -> Result<CriticalityReport, Error> {
    check_unit_grid(grid)?;
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    let kernels = forecast_kernels(system);
    let fredholm_system = FredholmSystem {
        kernels,
        free_terms: (0..system.participants())
            .map(|_| numcore::constant_fn(0.0))
            .collect(),
        lambda: TAYLOR_LAMBDA,
    };
    let operator = fredholm::system_operator_matrix(&fredholm_system, grid);
    let mu = numcore::eigenvalues(&operator)?;
    let max_mag = mu.iter().map(|m| m.norm()).fold(0.0, f64::max);
    let mut entries: Vec<CriticalityEntry> = mu
        .into_iter()
        .filter(|m| m.norm() > 1e-12 * max_mag.max(f64::MIN_POSITIVE))
        .map(|m| {
            let value = m.finv();
            CriticalityEntry {
                value,
                gap: (value - TAYLOR_LAMBDA).norm() / TAYLOR_LAMBDA,
            }
        })
        .collect();
    entries.sort_by(|a, b| a.gap.partial_cmp(&b.gap).unwrap());
    entries.truncate(count);
    let warning = entries.first().map(|e| e.gap < CRITICAL_GAP).unwrap_or(false);
    Ok(CriticalityReport {
        reference: TAYLOR_LAMBDA,
        entries,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::{constant_fn, solve_dense, time_fn};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_by_two() -> (DenseMatrix, Vec<f64>) {
        (
            DenseMatrix::from_rows(&[vec![0.3, 0.2], vec![0.1, 0.4]]).unwrap(),
            vec![1.0, 2.0],
        )
    }

    // ---- static solves ----

    #[test]
    fn contractive_zero_matrix_returns_costs() {
        let a = DenseMatrix::zeros(2);
        let (x, report) = static_solve_contractive(&a, &[1.5, -2.0], 1e-12, 10).unwrap();
        assert_eq!(x, vec![1.5, -2.0]);
        assert!(report.converged);
        assert!(report.iterations <= 2);
    }

    #[test]
    fn contractive_scalar_geometric_series() {
        let a = DenseMatrix::from_rows(&[vec![0.5]]).unwrap();
        let (x, report) = static_solve_contractive(&a, &[1.0], 1e-12, 200).unwrap();
        assert_abs_diff_eq!(x[0], 2.0, epsilon = 1e-10);
        assert!(report.converged);
    }

    #[test]
    fn contractive_cross_coupling() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap();
        let (x, _) = static_solve_contractive(&a, &[1.0, 1.0], 1e-13, 300).unwrap();
        assert_abs_diff_eq!(x[0], 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(x[1], 2.0, epsilon = 1e-10);
    }

    #[test]
    fn contractive_rejects_large_norm() {
        let a = DenseMatrix::from_rows(&[vec![0.6, 0.6], vec![0.0, 0.2]]).unwrap();
        assert!(matches!(
            static_solve_contractive(&a, &[1.0, 1.0], 1e-10, 10),
            Err(Error::NotContractive { .. })
        ));
    }

    #[test]
    fn contractive_converges_geometrically() {
        let (a, c) = two_by_two();
        let norm = a.inf_norm();
        // track successive-change ratios directly
        let mut x = vec![0.0; 2];
        let mut prev_diff = f64::INFINITY;
        for _ in 0..60 {
            let ax = a.mul_vec(&x);
            let next: Vec<f64> = ax.iter().zip(&c).map(|(v, ci)| v + ci).collect();
            let diff = x
                .iter()
                .zip(&next)
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max);
            if prev_diff.is_finite() && prev_diff > 1e-10 {
                // geometric contraction with rounding slack at the iterate scale
                assert!(
                    diff <= norm * prev_diff + 64.0 * f64::EPSILON,
                    "diff {diff} prev {prev_diff}"
                );
            }
            prev_diff = diff;
            x = next;
        }
    }

    #[test]
    fn general_identity_converges_in_one_step() {
        let a = DenseMatrix::zeros(3);
        let c = [1.0, -2.0, 0.5];
        let (x, report) = static_solve_general(&a, &c, 1e-12, 10).unwrap();
        assert_eq!(x, c.to_vec());
        assert!(report.converged);
        assert_eq!(report.iterations, 2);
    }

    #[test]
    fn general_handles_non_contractive_columns() {
        // second column sums above one: a participant selling above value
        let a = DenseMatrix::from_rows(&[vec![0.2, 0.9], vec![0.3, 0.4]]).unwrap();
        let c = [1.0, -0.5];
        let (x, report) = static_solve_general(&a, &c, 1e-12, 200_000).unwrap();
        assert!(report.converged);
        let mut b = DenseMatrix::from_fn(2, |i, j| -a.get(i, j));
        for i in 0..2 {
            b.set(i, i, b.get(i, i) + 1.0);
        }
        let exact = solve_dense(&b, &c).unwrap();
        for (u, v) in x.iter().zip(&exact) {
            assert!((u - v).abs() < 1e-8);
        }
    }

    #[test]
    fn general_reports_failure_on_singular_b() {
        // A = I makes B = 0; the residual cannot vanish
        let a = DenseMatrix::identity(1);
        let (x, report) = static_solve_general(&a, &[1.0], 1e-10, 50).unwrap();
        assert!(!report.converged);
        assert!(report.final_residual >= 1.0 - 1e-12);
        assert_eq!(x, vec![0.0]);
    }

    // ---- Cauchy problem ----

    fn decoupled_unit() -> (BalanceSystem, CauchyData) {
        let system =
            BalanceSystem::constant(&DenseMatrix::zeros(1), &[0.0], 1.0).unwrap();
        let data = CauchyData {
            p: vec![1.0],
            pp: vec![0.0],
        };
        (system, data)
    }

    #[test]
    fn cauchy_kernels_match_the_derived_forms() {
        let (system, data) = decoupled_unit();
        let vs = build_cauchy_volterra(&system, &data).unwrap();
        assert_eq!(vs.lambda, 2.0);
        for (t, h) in [(0.5, 0.25), (1.0, 0.0), (0.75, 0.75)] {
            assert_eq!((vs.kernels[0][0])(t, h), -(t - h) - 1.0);
        }
    }

    #[test]
    fn cauchy_zero_inputs_give_zero_free_terms() {
        let system = BalanceSystem::constant(&DenseMatrix::zeros(2), &[0.0, 0.0], 1.0).unwrap();
        let data = CauchyData {
            p: vec![0.0, 0.0],
            pp: vec![0.0, 0.0],
        };
        let vs = build_cauchy_volterra(&system, &data).unwrap();
        for q in &vs.free_terms {
            for t in [0.0, 0.3, 1.0] {
                assert_eq!(q(t), 0.0);
            }
        }
    }

    #[test]
    fn cauchy_constant_coefficients_shift_invariant_kernels() {
        let (a, c) = two_by_two();
        let system = BalanceSystem::constant(&a, &c, 1.0).unwrap();
        let data = CauchyData {
            p: vec![0.0, 0.0],
            pp: vec![0.0, 0.0],
        };
        let vs = build_cauchy_volterra(&system, &data).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let k = &vs.kernels[i][j];
                assert_abs_diff_eq!(k(0.7, 0.2), k(0.9, 0.4), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn cauchy_equilibrium_start_stays_constant() {
        let (a, c) = two_by_two();
        let mut b = DenseMatrix::from_fn(2, |i, j| -a.get(i, j));
        for i in 0..2 {
            b.set(i, i, b.get(i, i) + 1.0);
        }
        let equilibrium = solve_dense(&b, &c).unwrap();
        let system = BalanceSystem::constant(&a, &c, 1.0).unwrap();
        let data = CauchyData {
            p: equilibrium.clone(),
            pp: vec![0.0, 0.0],
        };
        let grid = Grid::uniform(0.0, 1.0, 100).unwrap();
        let (xs, report) = simulate_cauchy(&system, &data, &grid).unwrap();
        assert!(report.converged);
        for i in 0..2 {
            for v in &xs[i] {
                assert!((v - equilibrium[i]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn cauchy_decoupled_benchmark_against_closed_form() {
        let (system, data) = decoupled_unit();
        let grid = Grid::uniform(0.0, 1.0, 200).unwrap();
        let (xs, report) = simulate_cauchy(&system, &data, &grid).unwrap();
        assert!(report.converged);
        // x'' + 2x' + 2x = 0 with roots -1 +- i
        let mut worst = 0.0_f64;
        for (x, &t) in xs[0].iter().zip(grid.nodes()) {
            let exact = (-t).exp() * (t.cos() + t.sin());
            worst = worst.max((x - exact).abs());
        }
        // honest second-order bound for this discretization; measured
        // 8.6e-6 at 200 segments, constant about 0.35
        assert!(worst < 1e-5, "max error {worst}");
    }

    #[test]
    fn cauchy_initial_data_reproduced() {
        let (a, c) = two_by_two();
        let system = BalanceSystem::constant(&a, &c, 1.0).unwrap();
        let data = CauchyData {
            p: vec![0.5, 1.5],
            pp: vec![0.2, -0.1],
        };
        let grid = Grid::uniform(0.0, 1.0, 100).unwrap();
        let (xs, _) = simulate_cauchy(&system, &data, &grid).unwrap();
        let h = grid.step();
        for i in 0..2 {
            assert_eq!(xs[i][0], data.p[i]);
            let fd = (xs[i][1] - xs[i][0]) / h;
            assert!((fd - data.pp[i]).abs() < 10.0 * h);
        }
    }

    #[test]
    fn cauchy_is_jointly_linear_in_data_and_costs() {
        let (a, c) = two_by_two();
        let system = BalanceSystem::constant(&a, &c, 1.0).unwrap();
        let scaled_system = BalanceSystem::constant(
            &a,
            &c.iter().map(|v| 3.0 * v).collect::<Vec<_>>(),
            1.0,
        )
        .unwrap();
        let data = CauchyData {
            p: vec![0.5, 1.5],
            pp: vec![0.2, -0.1],
        };
        let scaled_data = CauchyData {
            p: data.p.iter().map(|v| 3.0 * v).collect(),
            pp: data.pp.iter().map(|v| 3.0 * v).collect(),
        };
        let grid = Grid::uniform(0.0, 1.0, 60).unwrap();
        let (base, _) = simulate_cauchy(&system, &data, &grid).unwrap();
        let (scaled, _) = simulate_cauchy(&scaled_system, &scaled_data, &grid).unwrap();
        for i in 0..2 {
            for (u, v) in base[i].iter().zip(&scaled[i]) {
                assert_abs_diff_eq!(3.0 * u, *v, epsilon = 1e-9 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn cauchy_residual_is_second_order_small() {
        let (a, c) = two_by_two();
        let system = BalanceSystem::constant(&a, &c, 1.0).unwrap();
        let data = CauchyData {
            p: vec![0.5, 1.5],
            pp: vec![0.2, -0.1],
        };
        for segs in [100usize, 200] {
            let grid = Grid::uniform(0.0, 1.0, segs).unwrap();
            let (xs, _) = simulate_cauchy(&system, &data, &grid).unwrap();
            let h = grid.step();
            let mut worst = 0.0_f64;
            for k in 1..grid.len() - 1 {
                for i in 0..2 {
                    let d2 = (xs[i][k + 1] - 2.0 * xs[i][k] + xs[i][k - 1]) / (h * h);
                    let d1 = (xs[i][k + 1] - xs[i][k - 1]) / (2.0 * h);
                    let coupling: f64 = (0..2).map(|j| a.get(i, j) * xs[j][k]).sum();
                    let res = d2 + 2.0 * d1 + 2.0 * xs[i][k] - 2.0 * coupling - 2.0 * c[i];
                    worst = worst.max(res.abs());
                }
            }
            // the trapezoid reconstruction interlocks with the centered
            // stencil, so the residual sits far below the O(h^2) bound
            assert!(worst < 1e-2 * h * h, "residual {worst} at {segs} segments");
        }
    }

    // ---- forecast ----

    #[test]
    fn forecast_kernel_examples() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let system = BalanceSystem::constant(&a, &[0.0, 0.0], 1.0).unwrap();
        let kernels = forecast_kernels(&system);
        // off-diagonal branch t <= h: t (h - 1) a_ij
        assert_abs_diff_eq!((kernels[0][1])(0.5, 0.75), 0.5 * (0.75 - 1.0), epsilon = 1e-15);
        // Green part continuous across the diagonal
        let eps = 1e-9;
        let below = (kernels[0][1])(0.5, 0.5 - eps);
        let above = (kernels[0][1])(0.5, 0.5 + eps);
        assert_abs_diff_eq!(below, above, epsilon = 1e-8);
        assert_abs_diff_eq!(below, 0.5 * (0.5 - 1.0), epsilon = 1e-8);
        // the diagonal companion H jumps by one across h = t; it enters the
        // kernel with a minus sign
        let jump = (kernels[0][0])(0.5, 0.5 - eps) - (kernels[0][0])(0.5, 0.5 + eps);
        assert_abs_diff_eq!(jump, -1.0, epsilon = 1e-6);
        // and takes the mean of the one-sided limits at coincidence
        let mid = ((kernels[0][0])(0.5, 0.5 - eps) + (kernels[0][0])(0.5, 0.5 + eps)) / 2.0;
        assert_abs_diff_eq!((kernels[0][0])(0.5, 0.5), mid, epsilon = 1e-6);
    }

    #[test]
    fn forecast_boundary_values_are_machine_exact() {
        let (a, c) = two_by_two();
        let system = BalanceSystem::constant(&a, &c, 1.0).unwrap();
        let data = ForecastData {
            p: vec![0.5, 1.5],
            r: vec![0.9, 1.1],
        };
        let grid = Grid::uniform(0.0, 1.0, 50).unwrap();
        let (xs, _) = forecast(&system, &data, &grid).unwrap();
        for i in 0..2 {
            assert!((xs[i][0] - data.p[i]).abs() <= 1e-14 * data.p[i].abs().max(1.0));
            let last = xs[i].last().unwrap();
            assert!((last - data.r[i]).abs() <= 1e-13 * data.r[i].abs().max(1.0));
        }
    }

    #[test]
    fn forecast_equilibrium_is_constant() {
        let (a, c) = two_by_two();
        let mut b = DenseMatrix::from_fn(2, |i, j| -a.get(i, j));
        for i in 0..2 {
            b.set(i, i, b.get(i, i) + 1.0);
        }
        let equilibrium = solve_dense(&b, &c).unwrap();
        let system = BalanceSystem::constant(&a, &c, 1.0).unwrap();
        let data = ForecastData {
            p: equilibrium.clone(),
            r: equilibrium.clone(),
        };
        let grid = Grid::uniform(0.0, 1.0, 60).unwrap();
        let (xs, _) = forecast(&system, &data, &grid).unwrap();
        for i in 0..2 {
            for v in &xs[i] {
                assert!((v - equilibrium[i]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn forecast_reproduces_the_cauchy_trajectory() {
        let (a, c) = two_by_two();
        let system = BalanceSystem::constant(&a, &c, 1.0).unwrap();
        let cauchy = CauchyData {
            p: vec![0.5, 1.5],
            pp: vec![0.2, -0.1],
        };
        let grid = Grid::uniform(0.0, 1.0, 200).unwrap();
        let (xc, _) = simulate_cauchy(&system, &cauchy, &grid).unwrap();
        let data = ForecastData {
            p: cauchy.p.clone(),
            r: xc.iter().map(|x| *x.last().unwrap()).collect(),
        };
        let (xf, _) = forecast(&system, &data, &grid).unwrap();
        for i in 0..2 {
            for (u, v) in xc[i].iter().zip(&xf[i]) {
                assert!((u - v).abs() < 1e-5, "deviation {}", (u - v).abs());
            }
        }
    }

    #[test]
    fn forecast_n1_matches_the_boundary_value_closed_form() {
        // x'' + 2x' + 2x = 0, x(0)=p, x(1)=r
        let system = BalanceSystem::constant(&DenseMatrix::zeros(1), &[0.0], 1.0).unwrap();
        let (p, r) = (1.0, 0.7);
        let data = ForecastData {
            p: vec![p],
            r: vec![r],
        };
        let grid = Grid::uniform(0.0, 1.0, 200).unwrap();
        let (xs, _) = forecast(&system, &data, &grid).unwrap();
        let b = (r * 1.0_f64.exp() - p * 1.0_f64.cos()) / 1.0_f64.sin();
        let mut worst = 0.0_f64;
        for (x, &t) in xs[0].iter().zip(grid.nodes()) {
            let exact = (-t).exp() * (p * t.cos() + b * t.sin());
            worst = worst.max((x - exact).abs());
        }
        assert!(worst < 1e-5, "max error {worst}");
    }

    // ---- variational sweep ----

    #[test]
    fn sweep_with_zero_perturbation_reproduces_forecast() {
        let (a, c) = two_by_two();
        let system = BalanceSystem::constant(&a, &c, 1.0).unwrap();
        let data = ForecastData {
            p: vec![0.5, 1.5],
            r: vec![0.9, 1.1],
        };
        let grid = Grid::uniform(0.0, 1.0, 40).unwrap();
        let (direct, _) = forecast(&system, &data, &grid).unwrap();
        let swept = variational_sweep(&system, &data, &[SweepVariant::zero(2)], &grid).unwrap();
        assert_eq!(swept.len(), 1);
        for i in 0..2 {
            for (u, v) in direct[i].iter().zip(&swept[0][i]) {
                assert!((u - v).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn sweep_with_no_variants_is_empty() {
        let (a, c) = two_by_two();
        let system = BalanceSystem::constant(&a, &c, 1.0).unwrap();
        let data = ForecastData {
            p: vec![0.5, 1.5],
            r: vec![0.9, 1.1],
        };
        let grid = Grid::uniform(0.0, 1.0, 20).unwrap();
        assert!(variational_sweep(&system, &data, &[], &grid)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn sweep_responses_are_additive() {
        let (a, c) = two_by_two();
        let system = BalanceSystem::constant(&a, &c, 1.0).unwrap();
        let data = ForecastData {
            p: vec![0.5, 1.5],
            r: vec![0.9, 1.1],
        };
        let grid = Grid::uniform(0.0, 1.0, 40).unwrap();
        let v1 = SweepVariant {
            cost_delta: vec![time_fn(|t| 0.2 * t), constant_fn(0.0)],
            terminal_delta: vec![0.0, 0.0],
        };
        let v2 = SweepVariant {
            cost_delta: vec![constant_fn(0.0), constant_fn(-0.1)],
            terminal_delta: vec![0.05, -0.02],
        };
        let both = SweepVariant {
            cost_delta: vec![time_fn(|t| 0.2 * t), constant_fn(-0.1)],
            terminal_delta: vec![0.05, -0.02],
        };
        let runs = variational_sweep(
            &system,
            &data,
            &[SweepVariant::zero(2), v1, v2, both],
            &grid,
        )
        .unwrap();
        let (zero, one, two, sum) = (&runs[0], &runs[1], &runs[2], &runs[3]);
        for i in 0..2 {
            for k in 0..grid.len() {
                let lhs = sum[i][k] - zero[i][k];
                let rhs = (one[i][k] - zero[i][k]) + (two[i][k] - zero[i][k]);
                assert!((lhs - rhs).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn sweep_matches_direct_solves_per_variant() {
        let (a, c) = two_by_two();
        let system = BalanceSystem::constant(&a, &c, 1.0).unwrap();
        let data = ForecastData {
            p: vec![0.5, 1.5],
            r: vec![0.9, 1.1],
        };
        let grid = Grid::uniform(0.0, 1.0, 40).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let variants: Vec<SweepVariant> = (0..5)
            .map(|_| {
                let c0 = rng.gen::<f64>() - 0.5;
                let c1 = rng.gen::<f64>() - 0.5;
                SweepVariant {
                    cost_delta: vec![constant_fn(c0), constant_fn(c1)],
                    terminal_delta: vec![rng.gen::<f64>() * 0.2, rng.gen::<f64>() * 0.2],
                }
            })
            .collect();
        let swept = variational_sweep(&system, &data, &variants, &grid).unwrap();
        for (variant, traj) in variants.iter().zip(&swept) {
            let (pert_system, pert_data) = perturbed_inputs(&system, &data, variant).unwrap();
            let (direct, _) = forecast(&pert_system, &pert_data, &grid).unwrap();
            for i in 0..2 {
                for (u, v) in direct[i].iter().zip(&traj[i]) {
                    assert!((u - v).abs() < 1e-8);
                }
            }
        }
    }

    // ---- criticality ----

    #[test]
    fn criticality_report_is_sorted_and_sized() {
        let (a, c) = two_by_two();
        let system = BalanceSystem::constant(&a, &c, 1.0).unwrap();
        let grid = Grid::uniform(0.0, 1.0, 40).unwrap();
        let report = criticality_check(&system, &grid, 5).unwrap();
        assert_eq!(report.entries.len(), 5);
        assert_eq!(report.reference, 2.0);
        for pair in report.entries.windows(2) {
            assert!(pair[0].gap <= pair[1].gap);
        }
    }

    #[test]
    fn criticality_warning_flips_as_a_characteristic_number_crosses_two() {
        // for a scalar constant coefficient s, the homogeneous problem has
        // a real characteristic number 2(1-s) - 2 sqrt((1-s)^2 - pi^2)
        // crossing 2 at s = (1 - pi^2)/2
        let grid = Grid::uniform(0.0, 1.0, 120).unwrap();
        let mut signed_gaps = Vec::new();
        for s in [-4.0, -4.2, -4.4348, -4.7, -5.0] {
            let a = DenseMatrix::from_rows(&[vec![s]]).unwrap();
            let system = BalanceSystem::constant(&a, &[0.0], 1.0).unwrap();
            let report = criticality_check(&system, &grid, 3).unwrap();
            let nearest = &report.entries[0];
            assert!(nearest.value.im.abs() < 1e-8);
            signed_gaps.push(nearest.value.re - 2.0);
            let expected_warning = nearest.gap < CRITICAL_GAP;
            assert_eq!(report.warning, expected_warning);
            // closed-form oracle from the boundary-value problem
            let one_minus_s = 1.0 - s;
            let closed =
                2.0 * one_minus_s - 2.0 * (one_minus_s * one_minus_s - std::f64::consts::PI.powi(2)).sqrt();
            assert!(
                (nearest.value.re - closed).abs() < 5e-3,
                "s={s}: {} vs {}",
                nearest.value.re,
                closed
            );
        }
        assert!(signed_gaps.first().unwrap() > &0.0);
        assert!(signed_gaps.last().unwrap() < &0.0);
        for pair in signed_gaps.windows(2) {
            assert!(pair[0] > pair[1], "gap path should fall monotonically");
        }
        // warning on at the crossing point
        let a = DenseMatrix::from_rows(&[vec![(1.0 - std::f64::consts::PI.powi(2)) / 2.0]]).unwrap();
        let system = BalanceSystem::constant(&a, &[0.0], 1.0).unwrap();
        assert!(criticality_check(&system, &grid, 1).unwrap().warning);
        // and off far from it
        let a = DenseMatrix::from_rows(&[vec![0.2]]).unwrap();
        let system = BalanceSystem::constant(&a, &[0.0], 1.0).unwrap();
        assert!(!criticality_check(&system, &grid, 1).unwrap().warning);
    }

    #[test]
    fn criticality_matches_an_independent_block_assembly_for_zero_coefficients() {
        let system = BalanceSystem::constant(&DenseMatrix::zeros(2), &[0.0, 0.0], 1.0).unwrap();
        let grid = Grid::uniform(0.0, 1.0, 30).unwrap();
        let report = criticality_check(&system, &grid, 4).unwrap();

        // independent dense assembly of the same block operator
        let nodes = grid.nodes();
        let weights = grid.weights();
        let nn = nodes.len();
        let kernel = |t: f64, h: f64| {
            let g = if h <= t { h * (t - 1.0) } else { t * (h - 1.0) };
            let slope = if h < t {
                h
            } else if h > t {
                h - 1.0
            } else {
                h - 0.5
            };
            -g - slope
        };
        let op = DenseMatrix::from_fn(2 * nn, |row, col| {
            let (i, a_) = (row / nn, row % nn);
            let (j, b_) = (col / nn, col % nn);
            if i == j {
                weights[b_] * kernel(nodes[a_], nodes[b_])
            } else {
                0.0
            }
        });
        let mu = numcore::eigenvalues(&op).unwrap();
        let max_mag = mu.iter().map(|m| m.norm()).fold(0.0, f64::max);
        let mut gaps: Vec<f64> = mu
            .iter()
            .filter(|m| m.norm() > 1e-12 * max_mag)
            .map(|m| (m.finv() - 2.0).norm() / 2.0)
            .collect();
        gaps.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (entry, oracle_gap) in report.entries.iter().zip(&gaps) {
            assert!(
                (entry.gap - oracle_gap).abs() < 1e-6,
                "{} vs {}",
                entry.gap,
                oracle_gap
            );
        }
    }

    #[test]
    fn builders_reject_mismatched_lengths() {
        let (a, c) = two_by_two();
        let system = BalanceSystem::constant(&a, &c, 1.0).unwrap();
        let bad = CauchyData {
            p: vec![1.0],
            pp: vec![0.0, 0.0],
        };
        assert!(build_cauchy_volterra(&system, &bad).is_err());
        let bad = ForecastData {
            p: vec![1.0, 2.0],
            r: vec![1.0],
        };
        assert!(build_forecast_system(&system, &bad).is_err());
    }
}
