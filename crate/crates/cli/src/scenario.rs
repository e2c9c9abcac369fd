//! Scenario execution: validate the kind-specific parameters, run the
//! corresponding solvers, and emit `trajectory.csv` plus `report.json`
//! (and `variant_NNN.csv` tables for sweeps) into the output directory.

use std::path::{Path, PathBuf};

use serde::Serialize;

use econodyn_core::balance::{
    self, BalanceSystem, CauchyData, CriticalityReport, ForecastData, SweepVariant,
};
use econodyn_core::numcore::constant_fn;
use econodyn_core::volterra::SolverReport;
use econodyn_core::{diagnostics, harrod, phillips, Grid};

use crate::config::{
    self, BalanceConfig, Coef, HarrodConfig, Kind, PhillipsConfig, ScenarioFile, VariantConfig,
    DEFAULT_GRID_SEGMENTS,
};
use crate::error::CliError;
use crate::output::{self, Table};

pub struct Overrides {
    pub grid: Option<usize>,
    pub out: Option<PathBuf>,
    pub variants: Option<Vec<VariantConfig>>,
}

/// Artifacts written by a scenario run.
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct SolverSummary {
    iterations: usize,
    final_residual: f64,
    converged: bool,
    warnings: Vec<String>,
}

impl From<&SolverReport> for SolverSummary {
    fn from(r: &SolverReport) -> Self {
        SolverSummary {
            iterations: r.iterations,
            final_residual: r.final_residual,
            converged: r.converged,
            warnings: r.warnings.clone(),
        }
    }
}

#[derive(Serialize)]
struct CharacteristicGap {
    re: f64,
    im: f64,
    gap: f64,
}

#[derive(Serialize)]
struct CriticalitySummary {
    reference: f64,
    warning: bool,
    entries: Vec<CharacteristicGap>,
}

impl From<&CriticalityReport> for CriticalitySummary {
    fn from(r: &CriticalityReport) -> Self {
        CriticalitySummary {
            reference: r.reference,
            warning: r.warning,
            entries: r
                .entries
                .iter()
                .map(|e| CharacteristicGap {
                    re: e.value.re,
                    im: e.value.im,
                    gap: e.gap,
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
struct Report {
    kind: &'static str,
    grid_segments: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    discrete: Option<DiscreteSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coefficients: Option<PhillipsCoefficients>,
    #[serde(skip_serializing_if = "Option::is_none")]
    solver: Option<SolverSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    criticality: Option<CriticalitySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    variants: Option<usize>,
    warnings: Vec<String>,
}

impl Report {
    fn new(kind: &'static str, grid_segments: usize) -> Self {
        Report {
            kind,
            grid_segments,
            horizon: None,
            discrete: None,
            coefficients: None,
            solver: None,
            lambda: None,
            criticality: None,
            variants: None,
            warnings: Vec::new(),
        }
    }
}

#[derive(Serialize)]
struct DiscreteSummary {
    steps: u32,
    income: f64,
    exponential_discrepancy: f64,
}

#[derive(Serialize)]
struct PhillipsCoefficients {
    alpha: f64,
    beta: f64,
    gamma: f64,
    classical_a: f64,
    classical_b: f64,
}

#[derive(Serialize)]
struct HealthSummary {
    contractive: bool,
    invertible_everywhere: bool,
    well_conditioned: bool,
    nonnegative: bool,
    irreducible: bool,
    records: Vec<HealthRecord>,
    messages: Vec<String>,
}

#[derive(Serialize)]
struct HealthRecord {
    t: f64,
    inf_norm: f64,
    det: f64,
    condition: f64,
}

#[derive(Serialize)]
struct DiagnoseReport {
    kind: &'static str,
    grid_segments: usize,
    cond_threshold: f64,
    health: HealthSummary,
}

fn solver_error(e: impl std::fmt::Display) -> CliError {
    CliError::Solver(e.to_string())
}

fn check_converged(report: &SolverReport) -> Result<(), CliError> {
    if !report.converged {
        return Err(CliError::Solver(format!(
            "iteration did not converge: residual {:.3e} after {} iterations",
            report.final_residual, report.iterations
        )));
    }
    Ok(())
}

pub fn run(file: &ScenarioFile, overrides: &Overrides) -> Result<RunOutcome, CliError> {
    let segments = overrides.grid.or(file.grid).unwrap_or(DEFAULT_GRID_SEGMENTS);
    if segments == 0 {
        return Err(CliError::invalid("grid", "segment count must be positive"));
    }
    let out_dir = overrides
        .out
        .clone()
        .or_else(|| file.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    match file.kind {
        Kind::Harrod => run_harrod(file, segments, &out_dir),
        Kind::Phillips => run_phillips(file, segments, &out_dir),
        Kind::BalanceCauchy => run_balance_cauchy(file, segments, &out_dir),
        Kind::BalanceForecast => run_balance_forecast(file, segments, &out_dir),
        Kind::BalanceSweep => run_balance_sweep(file, segments, &out_dir, overrides),
        Kind::Diagnose => run_diagnose(file, segments, &out_dir),
    }
}

pub fn run_diagnose_entry(file: &ScenarioFile, overrides: &Overrides) -> Result<RunOutcome, CliError> {
    if file.kind != Kind::Diagnose {
        return Err(CliError::invalid(
            "kind",
            format!("`diagnose` expects kind = \"diagnose\", got \"{}\"", file.kind.as_str()),
        ));
    }
    run(file, overrides)
}

fn run_harrod(file: &ScenarioFile, segments: usize, out: &Path) -> Result<RunOutcome, CliError> {
    let cfg: HarrodConfig = config::parameters(file)?;
    let params = harrod::HarrodParams::new(cfg.m, cfg.n, cfg.y0, cfg.k0).map_err(|e| match e {
        harrod::Error::InvalidParameters { field, message } => {
            CliError::invalid(format!("parameters.{field}"), message)
        }
        other => CliError::invalid("parameters", other.to_string()),
    })?;
    let horizon = harrod::forecast_horizon(&params);
    let t_max = cfg.t_max.unwrap_or(0.9 * horizon);
    if !(t_max > 0.0 && t_max < horizon) {
        return Err(CliError::invalid(
            "parameters.t_max",
            format!("must lie in (0, horizon = {horizon}), got {t_max}"),
        ));
    }
    let grid = Grid::uniform(0.0, t_max, segments).map_err(|e| CliError::invalid("grid", e.to_string()))?;
    let mut exponential = Vec::with_capacity(grid.len());
    let mut corrected = Vec::with_capacity(grid.len());
    for &t in grid.nodes() {
        exponential.push(harrod::income_exponential(&params, t).map_err(solver_error)?);
        corrected.push(harrod::income_corrected(&params, t).map_err(solver_error)?);
    }
    let table = Table {
        time: grid.nodes().to_vec(),
        columns: vec![
            ("Y_exponential".to_string(), exponential),
            ("Y_corrected".to_string(), corrected),
        ],
    };
    let mut report = Report::new(Kind::Harrod.as_str(), segments);
    report.horizon = Some(horizon);
    report.discrete = Some(DiscreteSummary {
        steps: cfg.steps,
        income: harrod::income_discrete(&params, cfg.steps),
        exponential_discrepancy: harrod::exponential_discrepancy(&params, cfg.steps),
    });
    if let Some(w) = params.discrete_y0_mismatch() {
        report.warnings.push(w);
    }
    let files = vec![
        output::write_table(out, "trajectory.csv", &table)?,
        output::write_report(out, &report)?,
    ];
    Ok(RunOutcome { files })
}

fn run_phillips(file: &ScenarioFile, segments: usize, out: &Path) -> Result<RunOutcome, CliError> {
    let cfg: PhillipsConfig = config::parameters(file)?;
    let params = phillips::PhillipsParams::new(cfg.k, cfg.n, cfg.m, cfg.l, cfg.y1, cfg.y1p)
        .map_err(|e| match e {
            phillips::Error::InvalidParameters { field, message } => {
                CliError::invalid(format!("parameters.{field}"), message)
            }
            other => CliError::invalid("parameters", other.to_string()),
        })?;
    if !(cfg.tau_max.is_finite() && cfg.tau_max > 1.0) {
        return Err(CliError::invalid(
            "parameters.tau_max",
            format!("must exceed 1, got {}", cfg.tau_max),
        ));
    }
    let grid = Grid::uniform(1.0, cfg.tau_max, segments)
        .map_err(|e| CliError::invalid("grid", e.to_string()))?;
    let (corrected, solver) = phillips::corrected_income(&params, &grid).map_err(solver_error)?;
    check_converged(&solver)?;
    // classical comparison in the same dimensionless frame: tau = 1 + k t
    let classical: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&tau| {
            phillips::classical_solution(&params, cfg.y1, cfg.k * cfg.y1p, (tau - 1.0) / cfg.k)
        })
        .collect();
    let table = Table {
        time: grid.nodes().to_vec(),
        columns: vec![
            ("Y_corrected".to_string(), corrected),
            ("Y_classical".to_string(), classical),
        ],
    };
    let (a, b) = phillips::classical_coeffs(&params);
    let mut report = Report::new(Kind::Phillips.as_str(), segments);
    report.coefficients = Some(PhillipsCoefficients {
        alpha: params.alpha(),
        beta: params.beta(),
        gamma: params.gamma(),
        classical_a: a,
        classical_b: b,
    });
    report.warnings = solver.warnings.clone();
    report.solver = Some(SolverSummary::from(&solver));
    let files = vec![
        output::write_table(out, "trajectory.csv", &table)?,
        output::write_report(out, &report)?,
    ];
    Ok(RunOutcome { files })
}

fn unit_grid(segments: usize) -> Result<Grid, CliError> {
    Grid::uniform(0.0, 1.0, segments).map_err(|e| CliError::invalid("grid", e.to_string()))
}

fn trajectory_table(grid: &Grid, xs: &[Vec<f64>]) -> Table {
    Table {
        time: grid.nodes().to_vec(),
        columns: xs
            .iter()
            .enumerate()
            .map(|(i, series)| (format!("x_{}", i + 1), series.clone()))
            .collect(),
    }
}

fn run_balance_cauchy(file: &ScenarioFile, segments: usize, out: &Path) -> Result<RunOutcome, CliError> {
    let cfg: BalanceConfig = config::parameters(file)?;
    let system = cfg.system()?;
    let data = CauchyData {
        p: cfg.prices("p")?,
        pp: cfg.prices("pp")?,
    };
    let grid = unit_grid(segments)?;
    let (xs, solver) = balance::simulate_cauchy(&system, &data, &grid).map_err(solver_error)?;
    check_converged(&solver)?;
    let mut report = Report::new(Kind::BalanceCauchy.as_str(), segments);
    report.lambda = Some(balance::TAYLOR_LAMBDA);
    report.warnings = solver.warnings.clone();
    report.solver = Some(SolverSummary::from(&solver));
    let files = vec![
        output::write_table(out, "trajectory.csv", &trajectory_table(&grid, &xs))?,
        output::write_report(out, &report)?,
    ];
    Ok(RunOutcome { files })
}

fn forecast_inputs(cfg: &BalanceConfig) -> Result<(BalanceSystem, ForecastData), CliError> {
    let system = cfg.system()?;
    let data = ForecastData {
        p: cfg.prices("p")?,
        r: cfg.prices("r")?,
    };
    Ok((system, data))
}

fn run_balance_forecast(
    file: &ScenarioFile,
    segments: usize,
    out: &Path,
) -> Result<RunOutcome, CliError> {
    let cfg: BalanceConfig = config::parameters(file)?;
    let (system, data) = forecast_inputs(&cfg)?;
    let grid = unit_grid(segments)?;
    let criticality =
        balance::criticality_check(&system, &grid, cfg.criticality_count).map_err(solver_error)?;
    let mut report = Report::new(Kind::BalanceForecast.as_str(), segments);
    report.lambda = Some(balance::TAYLOR_LAMBDA);
    if criticality.warning {
        report.warnings.push(format!(
            "a characteristic number sits within {:.1}% of lambda = 2; the forecast operator is near-singular",
            100.0 * criticality.min_gap().unwrap_or(0.0)
        ));
    }
    report.criticality = Some(CriticalitySummary::from(&criticality));
    match balance::forecast(&system, &data, &grid) {
        Ok((xs, solver)) => {
            report.solver = Some(SolverSummary::from(&solver));
            let files = vec![
                output::write_table(out, "trajectory.csv", &trajectory_table(&grid, &xs))?,
                output::write_report(out, &report)?,
            ];
            Ok(RunOutcome { files })
        }
        Err(e) => {
            // the report (with the criticality gaps) is still written so the
            // failure can be diagnosed
            report.warnings.push(e.to_string());
            output::write_report(out, &report)?;
            Err(solver_error(e))
        }
    }
}

fn run_balance_sweep(
    file: &ScenarioFile,
    segments: usize,
    out: &Path,
    overrides: &Overrides,
) -> Result<RunOutcome, CliError> {
    let cfg: BalanceConfig = config::parameters(file)?;
    let (system, data) = forecast_inputs(&cfg)?;
    let n = system.participants();
    let variant_configs = overrides
        .variants
        .clone()
        .or_else(|| file.variants.clone())
        .unwrap_or_default();
    let mut variants = Vec::with_capacity(variant_configs.len());
    for (idx, vc) in variant_configs.iter().enumerate() {
        let cost_delta = match &vc.c_delta {
            Some(coefs) => {
                if coefs.len() != n {
                    return Err(CliError::invalid(
                        format!("variants[{idx}].c_delta"),
                        format!("expected {n} entries, got {}", coefs.len()),
                    ));
                }
                for (i, coef) in coefs.iter().enumerate() {
                    coef.validate(&format!("variants[{idx}].c_delta[{i}]"))?;
                }
                coefs.iter().map(Coef::to_fn).collect()
            }
            None => (0..n).map(|_| constant_fn(0.0)).collect(),
        };
        let terminal_delta = match &vc.r_delta {
            Some(r) => {
                if r.len() != n {
                    return Err(CliError::invalid(
                        format!("variants[{idx}].r_delta"),
                        format!("expected {n} entries, got {}", r.len()),
                    ));
                }
                r.clone()
            }
            None => vec![0.0; n],
        };
        variants.push(SweepVariant {
            cost_delta,
            terminal_delta,
        });
    }
    let grid = unit_grid(segments)?;
    let (baseline, solver) = balance::forecast(&system, &data, &grid).map_err(solver_error)?;
    let swept = balance::variational_sweep(&system, &data, &variants, &grid).map_err(solver_error)?;
    let mut report = Report::new(Kind::BalanceSweep.as_str(), segments);
    report.lambda = Some(balance::TAYLOR_LAMBDA);
    report.variants = Some(swept.len());
    report.warnings = solver.warnings.clone();
    report.solver = Some(SolverSummary::from(&solver));
    let mut files = vec![output::write_table(
        out,
        "trajectory.csv",
        &trajectory_table(&grid, &baseline),
    )?];
    for (idx, trajectories) in swept.iter().enumerate() {
        files.push(output::write_table(
            out,
            &format!("variant_{idx:03}.csv"),
            &trajectory_table(&grid, trajectories),
        )?);
    }
    files.push(output::write_report(out, &report)?);
    Ok(RunOutcome { files })
}

fn run_diagnose(file: &ScenarioFile, segments: usize, out: &Path) -> Result<RunOutcome, CliError> {
    let cfg: BalanceConfig = config::parameters(file)?;
    let system = cfg.system()?;
    if !(cfg.cond_threshold > 1.0) {
        return Err(CliError::invalid(
            "parameters.cond_threshold",
            format!("must exceed 1, got {}", cfg.cond_threshold),
        ));
    }
    let grid = unit_grid(segments)?;
    let health = diagnostics::diagnose(&system, &grid, cfg.cond_threshold)
        .map_err(solver_error)?;
    let report = DiagnoseReport {
        kind: Kind::Diagnose.as_str(),
        grid_segments: segments,
        cond_threshold: cfg.cond_threshold,
        health: HealthSummary {
            contractive: health.contractive,
            invertible_everywhere: health.invertible_everywhere,
            well_conditioned: health.well_conditioned,
            nonnegative: health.nonnegative,
            irreducible: health.irreducible,
            records: health
                .records
                .iter()
                .map(|r| HealthRecord {
                    t: r.t,
                    inf_norm: r.inf_norm,
                    det: r.det,
                    condition: r.condition,
                })
                .collect(),
            messages: health.messages.clone(),
        },
    };
    let files = vec![output::write_report(out, &report)?];
    Ok(RunOutcome { files })
}
