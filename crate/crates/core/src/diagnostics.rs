//! Matrix- and graph-level health checks on the coefficient functions of a
//! balance system: contractivity of `A(t)` along the grid, invertibility and
//! conditioning at every node, and the nonnegativity/irreducibility
//! prerequisites for a Perron-Frobenius reading of the system.

use crate::balance::BalanceSystem;
use crate::numcore::{Grid, LuFactors};

/// Default conditioning threshold for the "well conditioned" flag.
pub const DEFAULT_COND_THRESHOLD: f64 = 1e8;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Core(#[from] crate::numcore::Error),
}

/// Per-node measurements of the coefficient matrix.
#[derive(Debug, Clone)]
pub struct NodeRecord {
    pub t: f64,
    pub inf_norm: f64,
    pub det: f64,
    pub condition: f64,
}

/// Aggregate health report; each flag is consistent with the records it
/// summarizes.
#[derive(Debug, Clone)]
pub struct HealthReport {
    pub records: Vec<NodeRecord>,
    pub contractive: bool,
    pub invertible_everywhere: bool,
    pub well_conditioned: bool,
    pub nonnegative: bool,
    pub irreducible: bool,
    pub messages: Vec<String>,
}

/// Infinity norms of `A(t)` at every node; contractive iff all stay
/// below one.
pub fn check_contractive(system: &BalanceSystem, grid: &Grid) -> (Vec<(f64, f64)>, bool) {
    let norms: Vec<(f64, f64)> = grid
        .nodes()
        .iter()
        .map(|&t| (t, system.matrix_at(t).inf_norm()))
        .collect();
    let contractive = norms.iter().all(|(_, n)| *n < 1.0);
    (norms, contractive)
}

/// Determinant and condition estimate of `A(t)` at every node.
/// `invertible_everywhere` requires every `|det|` to clear a scale-aware
/// floor; `well_conditioned` requires every condition estimate under the
/// threshold.
pub fn check_invertibility(
    system: &BalanceSystem,
    grid: &Grid,
    cond_threshold: f64,
) -> Result<(Vec<NodeRecord>, bool, bool), Error> {
    if cond_threshold <= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "condition threshold must exceed 1, got {cond_threshold}"
        )));
    }
    let n = system.participants();
    let mut records = Vec::with_capacity(grid.len());
    let mut invertible = true;
    let mut well_conditioned = true;
    for &t in grid.nodes() {
        let m = system.matrix_at(t);
        let norm = m.inf_norm();
        let (det, condition) = match LuFactors::factor(&m) {
            Ok(lu) => (lu.det(), lu.condition_inf_estimate()),
            Err(_) => (0.0, f64::INFINITY),
        };
        let det_floor = 1e-12 * norm.max(1.0).powi(n as i32);
        if det.abs() <= det_floor {
            invertible = false;
        }
        if !(condition < cond_threshold) {
            well_conditioned = false;
        }
        records.push(NodeRecord {
            t,
            inf_norm: norm,
            det,
            condition,
        });
    }
    Ok((records, invertible, well_conditioned))
}

/// Nonnegativity of all coefficients at all nodes, and strong connectivity
/// of the digraph with an edge `j -> i` wherever `a_ij(t) > 0` somewhere on
/// the grid. Transient zeros do not delete an edge.
pub fn check_perron_frobenius(system: &BalanceSystem, grid: &Grid) -> (bool, bool) {
    let n = system.participants();
    let mut nonnegative = true;
    let mut adjacency = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            for &t in grid.nodes() {
                let v = (system.coefficient(i, j))(t);
                if v < 0.0 {
                    nonnegative = false;
                }
                if v > 0.0 {
                    adjacency[j][i] = true; // edge j -> i
                }
            }
        }
    }
    (nonnegative, strongly_connected(&adjacency))
}

/// Kosaraju's check specialized to "exactly one strongly connected
/// component".
fn strongly_connected(adj: &[Vec<bool>]) -> bool {
    let n = adj.len();
    if n == 0 {
        return false;
    }
    let reach = |edges: &dyn Fn(usize, usize) -> bool| -> bool {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for w in 0..n {
                if !seen[w] && edges(v, w) {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(&|v, w| adj[v][w]) && reach(&|v, w| adj[w][v])
}

/// Runs all checks and assembles the combined report.
pub fn diagnose(
    system: &BalanceSystem,
    grid: &Grid,
    cond_threshold: f64,
) -> Result<HealthReport, Error> {
    let (_, contractive) = check_contractive(system, grid);
    let (records, invertible_everywhere, well_conditioned) =
        check_invertibility(system, grid, cond_threshold)?;
    let (nonnegative, irreducible) = check_perron_frobenius(system, grid);
    let mut messages = Vec::new();
    if !contractive {
        messages.push(
            "coefficient matrix is not contractive; plain balance iteration will not converge"
                .to_string(),
        );
    }
    if !invertible_everywhere {
        messages.push("determinant of A(t) vanishes at some node".to_string());
    }
    if !well_conditioned {
        messages.push(format!(
            "condition estimate exceeds {cond_threshold:.1e} at some node"
        ));
    }
    if !nonnegative {
        messages.push("negative coefficients present (debts or subventions)".to_string());
    }
    if !irreducible {
        messages.push(
            "coefficient digraph is not strongly connected; Perron-Frobenius prerequisites fail"
                .to_string(),
        );
    }
    Ok(HealthReport {
        records,
        contractive,
        invertible_everywhere,
        well_conditioned,
        nonnegative,
        irreducible,
        messages,
    })
}
