use paradiag::paradiag_one::{chebyshev_eigen, closed_form_eigen, direct_solve_geometric, direct_solve_hybrid, windowed_solve};
use paradiag::paradiag_two::{contraction_bound, random_initial_guess, wr_solve, BoundScheme, StationaryConfig};
use paradiag::problems::{make_problem, CaseId, ProblemInstance, ProblemParams};
use paradiag::time_disc::{
    assemble_hybrid_system, assemble_theta_system, geometric_grid, reference_matrix_exponential, sequential_hybrid,
    sequential_theta,
};
use paradiag::TimeGrid;

use super::{max_abs_error, timed, zero_forcing, ExperimentOutput};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::plot::{ChartSpec, Series};
use crate::table::{ResultTable, Value};

fn ade_problem(cfg: &ExperimentConfig, nu: f64, t_final: f64) -> Result<ProblemInstance> {
    let case = if cfg.dim == 2 { CaseId::Ade2d } else { CaseId::Ade1d };
    Ok(make_problem(case, &ProblemParams { nu, cells: cfg.cells, t_final, ..ProblemParams::default() })?)
}

/// Graded grids solved by the closed-form diagonalization, window by window.
pub fn direct(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let p = ade_problem(cfg, cfg.nu, 1.0)?;
    let nx = p.nx();
    let mut table = ResultTable::new([
        "theta",
        "nt",
        "windows",
        "tau",
        "t_end",
        "cond_v",
        "cond_scaled_v",
        "diff_sequential",
        "error",
        "error_sequential",
        "time",
    ]);
    let mut series = Vec::new();
    for &theta in &cfg.thetas {
        let mut pts = Vec::new();
        for &nt in &cfg.nts {
            let grid = geometric_grid(cfg.tau, cfg.dt_last, nt)?;
            let windows = vec![grid.clone(); cfg.windows];
            let eigen = closed_form_eigen(theta, cfg.tau, &grid)?;
            let (direct, secs) = timed(|| {
                windowed_solve(&p.u0, &windows, |u, _, g| {
                    let sys = assemble_theta_system(theta, g, &p.operator, u, zero_forcing(nx))?;
                    Ok(direct_solve_geometric(&sys, &eigen)?.0)
                })
            });
            let direct = direct?;
            let seq = windowed_solve(&p.u0, &windows, |u, _, g| sequential_theta(theta, g, &p.operator, u, zero_forcing(nx)))?;
            let reference = reference_matrix_exponential(&p.operator, &p.u0, &direct.times)?;
            let diff = max_abs_error(&direct.states, &seq.states)
                / seq.states.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
            let error = max_abs_error(&direct.states, &reference);
            let error_seq = max_abs_error(&seq.states, &reference);
            pts.push((nt as f64, error));
            table.push(vec![
                theta.into(),
                nt.into(),
                cfg.windows.into(),
                cfg.tau.into(),
                (*direct.times.last().unwrap_or(&0.0)).into(),
                eigen.cond_v().into(),
                eigen.cond_scaled_v().into(),
                diff.into(),
                error.into(),
                error_seq.into(),
                secs.into(),
            ])?;
        }
        series.push(Series { label: format!("theta = {theta}"), points: pts });
    }
    let mut out = ExperimentOutput::new(cfg.experiment, table);
    out.chart = Some((ChartSpec::new("Geometric-grid direct solver", "time steps per window", "max error").log_x().log_y(), series));
    Ok(out)
}

/// Hybrid midpoint scheme on a uniform grid over `t_final`.
pub fn hybrid(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let p = ade_problem(cfg, cfg.nu, cfg.t_final)?;
    let nx = p.nx();
    let mut table =
        ResultTable::new(["nt", "windows", "dt", "cond_v", "diff_sequential", "error", "error_sequential", "time"]);
    let mut direct_pts = Vec::new();
    let mut seq_pts = Vec::new();
    for &nt in &cfg.nts {
        let dt = cfg.t_final / (cfg.windows * nt) as f64;
        let grid = TimeGrid::uniform(nt, dt)?;
        let windows = vec![grid; cfg.windows];
        let eigen = chebyshev_eigen(nt, dt, 1e-14)?;
        let (direct, secs) = timed(|| {
            windowed_solve(&p.u0, &windows, |u, _, _| {
                let sys = assemble_hybrid_system(nt, dt, &p.operator, u, zero_forcing(nx))?;
                Ok(direct_solve_hybrid(&sys, &eigen)?.0)
            })
        });
        let direct = direct?;
        let seq = windowed_solve(&p.u0, &windows, |u, _, _| sequential_hybrid(nt, dt, &p.operator, u, zero_forcing(nx)))?;
        let reference = reference_matrix_exponential(&p.operator, &p.u0, &direct.times)?;
        let scale = seq.states.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
        let diff = max_abs_error(&direct.states, &seq.states) / scale;
        let error = max_abs_error(&direct.states, &reference);
        let error_seq = max_abs_error(&seq.states, &reference);
        direct_pts.push((nt as f64, error));
        seq_pts.push((nt as f64, error_seq));
        table.push(vec![
            nt.into(),
            cfg.windows.into(),
            dt.into(),
            eigen.cond.into(),
            diff.into(),
            error.into(),
            error_seq.into(),
            secs.into(),
        ])?;
    }
    table.add_order_column("error", None, "order")?;
    let mut out = ExperimentOutput::new(cfg.experiment, table);
    out.chart = Some((
        ChartSpec::new("Hybrid scheme: global error", "time steps", "max error").log_x().log_y(),
        vec![
            Series { label: "diagonalization".into(), points: direct_pts },
            Series { label: "sequential".into(), points: seq_pts },
        ],
    ));
    Ok(out)
}

/// Error floor below which contraction ratios are not meaningful.
pub const RATIO_FLOOR: f64 = 1e-13;

fn bound_scheme(theta: f64) -> BoundScheme {
    if theta == 1.0 {
        BoundScheme::BackwardEuler
    } else if theta == 0.5 {
        BoundScheme::Trapezoidal
    } else {
        BoundScheme::StableOneStep
    }
}

/// Waveform relaxation from a random guess, with errors against the
/// sequential solution of the same scheme.
pub fn waveform_relaxation(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let mut table = ResultTable::new([
        "dim",
        "nu",
        "theta",
        "alpha",
        "iterations",
        "converged",
        "initial_error",
        "final_error",
        "max_ratio",
        "bound",
        "iterations_to_tol",
        "predicted_iterations",
        "time",
    ]);
    let mut history = ResultTable::new(["nu", "theta", "iteration", "error", "increment", "ratio"]);
    let mut series = Vec::new();
    let mut failures = Vec::new();
    let dt = cfg.t_final / cfg.nt as f64;
    for &nu in &cfg.nus {
        let p = ade_problem(cfg, nu, cfg.t_final)?;
        let nx = p.nx();
        let grid = TimeGrid::uniform(cfg.nt, dt)?;
        for &theta in &cfg.thetas {
            let sys = assemble_theta_system(theta, &grid, &p.operator, &p.u0, zero_forcing(nx))?;
            let reference = sequential_theta(theta, &grid, &p.operator, &p.u0, zero_forcing(nx))?;
            let guess = random_initial_guess(cfg.nt, nx, cfg.amplitude, cfg.seed);
            let stat = StationaryConfig::new(cfg.tol, cfg.maxit)?;
            let (res, secs) = timed(|| wr_solve(&sys, cfg.alpha, &stat, &guess, Some(&reference)));
            let (_, report) = res?;
            let bound = contraction_bound(bound_scheme(theta), cfg.alpha, cfg.t_final, 0.0)?.value;
            let errors = report.error_history.clone().unwrap_or_default();
            let increments = report.increment_history.clone().unwrap_or_default();
            let ratios: Vec<Option<f64>> = (0..errors.len())
                .map(|k| (k > 0 && errors[k] > RATIO_FLOOR && errors[k - 1] > 0.0).then(|| errors[k] / errors[k - 1]))
                .collect();
            let max_ratio = ratios.iter().flatten().copied().fold(f64::NAN, f64::max);
            let e0 = errors.first().copied().unwrap_or(0.0);
            let hit = errors.iter().position(|&e| e <= cfg.tol);
            let predicted = (e0 > cfg.tol).then(|| ((cfg.tol / e0).ln() / bound.ln()).ceil() as i64).unwrap_or(0);
            if !report.converged {
                failures.push(format!("nu={nu} theta={theta}: {}", report.status));
            }
            for (k, e) in errors.iter().enumerate() {
                let inc = if k == 0 { None } else { increments.get(k - 1).copied() };
                history.push(vec![nu.into(), theta.into(), k.into(), (*e).into(), inc.into(), ratios[k].into()])?;
            }
            series.push(Series {
                label: format!("nu = {nu:e}, theta = {theta}"),
                points: errors.iter().enumerate().map(|(k, &e)| (k as f64, e)).collect(),
            });
            table.push(vec![
                cfg.dim.into(),
                nu.into(),
                theta.into(),
                cfg.alpha.into(),
                report.iterations.into(),
                report.converged.into(),
                e0.into(),
                errors.last().copied().into(),
                if max_ratio.is_nan() { Value::Empty } else { max_ratio.into() },
                bound.into(),
                hit.into(),
                predicted.into(),
                secs.into(),
            ])?;
        }
    }
    let mut out = ExperimentOutput::new(cfg.experiment, table);
    out.history = Some(history);
    out.failures = failures;
    out.chart = Some((ChartSpec::new("Waveform relaxation", "iteration", "max error").log_y(), series));
    Ok(out)
}
