//! Multiplier/accelerator income dynamics: the classical constant-coefficient
//! second-order form and the corrected variable-coefficient form, the latter
//! solved by reduction to a Volterra equation in the dimensionless time
//! `tau = 1 + k t` and reconstruction of the income from its second
//! derivative.

use crate::numcore::{kernel_fn, time_fn, Grid};
use crate::volterra::{self, SolverReport, VolterraProblem};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parameter `{field}` invalid: {message}")]
    InvalidParameters { field: &'static str, message: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Solver(#[from] volterra::Error),
}

/// Validated model parameters: reaction rate `k` (1/time), accelerator
/// coefficient `n` (time), multiplier share `m`, demand-adjustment rate `l`
/// (1/time), and the income data `y1 = Y(tau=1)`, `y1p = dY/dtau (tau=1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhillipsParams {
    k: f64,
    n: f64,
    m: f64,
    l: f64,
    y1: f64,
    y1p: f64,
}

impl PhillipsParams {
    pub fn new(k: f64, n: f64, m: f64, l: f64, y1: f64, y1p: f64) -> Result<Self, Error> {
        let check = |field: &'static str, ok: bool, message: String| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameters { field, message })
            }
        };
        check("k", k.is_finite() && k > 0.0, format!("must be positive, got {k}"))?;
        check("n", n.is_finite() && n > 0.0, format!("must be positive, got {n}"))?;
        check("m", m.is_finite() && m > 0.0 && m < 1.0, format!("must satisfy 0 < m < 1, got {m}"))?;
        check("l", l.is_finite() && l > 0.0, format!("must be positive, got {l}"))?;
        check("y1", y1.is_finite(), "must be finite".into())?;
        check("y1p", y1p.is_finite(), "must be finite".into())?;
        Ok(PhillipsParams { k, n, m, l, y1, y1p })
    }

    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn n(&self) -> f64 {
        self.n
    }
    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn l(&self) -> f64 {
        self.l
    }
    pub fn y1(&self) -> f64 {
        self.y1
    }
    pub fn y1p(&self) -> f64 {
        self.y1p
    }

    /// Dimensionless coefficients of the corrected equation
    /// `Y'' + (alpha + beta/tau) Y' + (gamma/tau) Y = 0` in `tau = 1 + k t`.
    pub fn alpha(&self) -> f64 {
        self.m * self.l / self.k
    }

    pub fn beta(&self) -> f64 {
        2.0 - self.n * self.l
    }

    pub fn gamma(&self) -> f64 {
        2.0 * self.m * self.l / self.k
    }
}

/// Coefficients `(a, b)` of the classical constant-coefficient equation
/// `Y'' + a Y' + b Y = 0`: `a = k + m l - n k l`, `b = m k l`.
pub fn classical_coeffs(params: &PhillipsParams) -> (f64, f64) {
    let PhillipsParams { k, n, m, l, .. } = *params;
    (k + m * l - n * k * l, m * k * l)
}

/// Exact solution of the classical equation with the given initial income
/// and rate at `t = 0`, dispatching on the character of the roots.
pub fn classical_solution(params: &PhillipsParams, y0: f64, y0p: f64, t: f64) -> f64 {
    let (a, b) = classical_coeffs(params);
    let disc = a * a - 4.0 * b;
    let scale = (a * a).max(4.0 * b.abs()).max(1e-300);
    if disc.abs() <= 1e-12 * scale {
        // repeated root r = -a/2
        let r = -a / 2.0;
        let c2 = y0p - r * y0;
        (y0 + c2 * t) * (r * t).exp()
    } else if disc > 0.0 {
        let sq = disc.sqrt();
        let r1 = (-a + sq) / 2.0;
        let r2 = (-a - sq) / 2.0;
        let c2 = (y0p - r1 * y0) / (r2 - r1);
        let c1 = y0 - c2;
        c1 * (r1 * t).exp() + c2 * (r2 * t).exp()
    } else {
        let re = -a / 2.0;
        let om = (-disc).sqrt() / 2.0;
        let c2 = (y0p - re * y0) / om;
        (re * t).exp() * (y0 * (om * t).cos() + c2 * (om * t).sin())
    }
}

/// Time-dependent coefficients of the corrected equation in original time:
/// `a(t) = m l + (2k - n k l)/(1 + k t)`, `b(t) = 2 m k l / (1 + k t)`.
pub fn corrected_coeffs(params: &PhillipsParams, t: f64) -> (f64, f64) {
    let PhillipsParams { k, n, m, l, .. } = *params;
    let denom = 1.0 + k * t;
    (m * l + (2.0 * k - n * k * l) / denom, 2.0 * m * k * l / denom)
}

/// Volterra reduction of the corrected equation on `tau >= 1`:
/// `phi = int_1^tau K(tau, eta) phi d eta + q(tau)` with `phi = Y''`,
/// `K(tau, eta) = -[alpha + beta/tau + gamma (tau - eta)/tau]` and
/// `q(tau) = -(alpha + beta/tau) Y1' - (gamma/tau)[(tau - 1) Y1' + Y1]`.
pub fn build_volterra(params: &PhillipsParams) -> VolterraProblem {
    let (alpha, beta, gamma) = (params.alpha(), params.beta(), params.gamma());
    let (y1, y1p) = (params.y1, params.y1p);
    VolterraProblem {
        lower: 1.0,
        kernel: kernel_fn(move |tau, eta| -(alpha + beta / tau + gamma * (tau - eta) / tau)),
        free_term: time_fn(move |tau| {
            -(alpha + beta / tau) * y1p - (gamma / tau) * ((tau - 1.0) * y1p + y1)
        }),
        lambda: 1.0,
    }
}

/// Solves the corrected model on a grid over `[1, T]` and reconstructs the
/// income `Y(tau) = int_1^tau (tau - eta) phi(eta) d eta + (tau - 1) Y1' + Y1`.
pub fn corrected_income(
    params: &PhillipsParams,
    grid: &Grid,
) -> Result<(Vec<f64>, SolverReport), Error> {
    if (grid.lower() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "corrected model lives on tau >= 1, grid starts at {}",
            grid.lower()
        )));
    }
    let problem = build_volterra(params);
    let (phi, report) = volterra::solve_picard(
        &problem,
        grid,
        volterra::DEFAULT_TOL,
        volterra::DEFAULT_MAX_ITER,
    )?;
    let nodes = grid.nodes();
    let mut income = Vec::with_capacity(nodes.len());
    for i in 0..nodes.len() {
        let tau = nodes[i];
        let mut acc = 0.0;
        for j in 0..=i {
            let w = grid.prefix_weight(i, j);
            if w != 0.0 {
                acc += w * (tau - nodes[j]) * phi[j];
            }
        }
        income.push(acc + (tau - 1.0) * params.y1p + params.y1);
    }
    Ok((income, report))
}
