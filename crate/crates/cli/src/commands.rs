use std::error::Error;
use std::io::Write;
use std::path::Path;

use proxmo_core::criticality::residual;
use proxmo_core::driver::{default_config, solve, Status};
use proxmo_core::numfmt::{serialize_f64, serialize_opt_vec, serialize_vec};
use proxmo_core::scan::pareto_scan_grid;
use proxmo_core::trace_csv::write_trace;
use proxmo_core::verify::verify;
use proxmo_core::{ActiveTol, Problem, Schedule, SolverConfig};
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::args::{Cli, Command, CriticalArgs, ScanArgs, SolveArgs, VerifyArgs};
use crate::Done;

type CmdResult = Result<Done, Box<dyn Error>>;

pub fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Critical(a) => run_critical(a),
        Command::Scan(a) => run_scan(a),
        Command::Verify(a) => run_verify(a),
    }
}

fn load(path: &Path) -> Result<Problem, Box<dyn Error>> {
    Problem::load(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn emit<T: Serialize>(value: &T) -> Result<(), Box<dyn Error>> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomically(
    path: &Path,
    fill: impl FnOnce(&mut NamedTempFile) -> Result<(), Box<dyn Error>>,
) -> Result<(), Box<dyn Error>> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    fill(&mut tmp)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)?;
    Ok(())
}

fn solver_config(p: &Problem, a: &SolveArgs) -> SolverConfig {
    let mut cfg = default_config(p);
    if let Some(mu) = a.mu_bar {
        cfg.mu_bar = mu;
        let lambda = 1.01 * cfg.lambda_threshold(p);
        cfg.lambda = Schedule::Constant(lambda);
        cfg.lambda_bar = 10.0 * lambda;
    }
    if let Some(lambda) = a.lambda {
        cfg.lambda = Schedule::Constant(lambda);
        cfg.lambda_bar = cfg.lambda_bar.max(10.0 * lambda);
    }
    cfg.tol_outer = a.tol;
    cfg.tol_inner = proxmo_core::driver::inner_tolerance(a.tol);
    cfg.max_outer = a.max_iter;
    cfg.override_lambda_check = a.override_lambda_check;
    cfg
}

#[derive(Serialize)]
struct SolveSummary {
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    failed_iteration: Option<usize>,
    iterations: usize,
    #[serde(serialize_with = "serialize_vec")]
    final_point: Vec<f64>,
    #[serde(rename = "F", serialize_with = "serialize_vec")]
    f_final: Vec<f64>,
    #[serde(serialize_with = "serialize_f64")]
    criticality_residual: f64,
    #[serde(serialize_with = "serialize_f64")]
    lambda: f64,
    #[serde(serialize_with = "serialize_f64")]
    mu_bar: f64,
    monotone_violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<String>,
}

fn run_solve(a: SolveArgs) -> CmdResult {
    let p = load(&a.problem.problem)?;
    let cfg = solver_config(&p, &a);
    let x0 =
        a.x0.as_ref()
            .map_or_else(|| p.reference_point.clone(), |v| v.0.clone());
    let trace = solve(&p, &x0, &cfg)?;
    if let Some(path) = &a.trace {
        write_atomically(path, |f| Ok(write_trace(&trace, f)?))?;
    }
    let last = trace.last();
    let (status, failed_iteration) = match trace.status {
        Status::Converged => ("converged", None),
        Status::MaxIterations => ("max_iterations", None),
        Status::InnerFailure { iteration, .. } => ("inner_failure", Some(iteration)),
    };
    emit(&SolveSummary {
        status,
        failed_iteration,
        iterations: trace.iterations(),
        final_point: trace.final_point.clone(),
        f_final: last.f_of_x.clone(),
        criticality_residual: last.criticality_residual,
        lambda: *cfg.lambda.at(0),
        mu_bar: cfg.mu_bar,
        monotone_violations: trace.monotone_violations(),
        trace: a.trace.as_ref().map(|t| t.display().to_string()),
    })?;
    Ok(match trace.status {
        Status::Converged => Done::Success,
        _ => Done::Incomplete,
    })
}

#[derive(Serialize)]
struct ActivePiece {
    component: usize,
    piece: usize,
    label: String,
}

#[derive(Serialize)]
struct CriticalReport {
    #[serde(serialize_with = "serialize_f64")]
    residual: f64,
    critical: bool,
    #[serde(serialize_with = "serialize_opt_vec")]
    direction: Option<Vec<f64>>,
    #[serde(serialize_with = "serialize_opt_vec")]
    directional_upper_bounds: Option<Vec<f64>>,
    #[serde(serialize_with = "serialize_vec")]
    hull_point: Vec<f64>,
    #[serde(rename = "F", serialize_with = "serialize_vec")]
    f_x: Vec<f64>,
    active: Vec<ActivePiece>,
    #[serde(serialize_with = "serialize_vec")]
    weights: Vec<f64>,
}

fn run_critical(a: CriticalArgs) -> CmdResult {
    let p = load(&a.problem.problem)?;
    let tol = a
        .eps_active
        .map_or_else(ActiveTol::default, ActiveTol::Absolute);
    let x = &a.x.0;
    let cert = residual(&p, x, tol)?;
    let active = cert
        .tags
        .iter()
        .map(|t| ActivePiece {
            component: t.component + 1,
            piece: t.piece + 1,
            label: p.components[t.component].pieces[t.piece].label.clone(),
        })
        .collect();
    emit(&CriticalReport {
        residual: cert.residual,
        critical: cert.is_critical(a.tol),
        direction: cert.descent_direction.clone(),
        directional_upper_bounds: cert.directional_upper_bounds.clone(),
        hull_point: cert.hull_point.clone(),
        f_x: p.evaluate(x)?,
        active,
        weights: cert.weights.clone(),
    })?;
    Ok(Done::Success)
}

#[derive(Serialize)]
struct Point(#[serde(serialize_with = "serialize_vec")] Vec<f64>);

#[derive(Serialize)]
struct ScanReport {
    count: usize,
    points: Vec<Point>,
}

fn run_scan(a: ScanArgs) -> CmdResult {
    let p = load(&a.problem.problem)?;
    let points = pareto_scan_grid(&p, &a.lo.0, &a.hi.0, a.step)?;
    emit(&ScanReport {
        count: points.len(),
        points: points.into_iter().map(Point).collect(),
    })?;
    Ok(Done::Success)
}

fn run_verify(a: VerifyArgs) -> CmdResult {
    let p = load(&a.problem.problem)?;
    let report = verify(&p, a.samples, a.seed);
    emit(&report)?;
    Ok(if report.passed {
        Done::Success
    } else {
        Done::Incomplete
    })
}
