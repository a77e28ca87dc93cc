use paradiag::paradiag_one::{chebyshev_eigen, direct_solve_wave_hybrid};
use paradiag::paradiag_two::wave_gmres_solve;
use paradiag::problems::{make_problem, CaseId, ProblemParams};
use paradiag::time_disc::assemble;
use paradiag::{KrylovConfig, Scheme, SolverOptions, StoppingNorm, TimeGrid};

use super::{timed, ExperimentOutput};
use crate::config::{ExperimentConfig, WaveScheme};
use crate::error::Result;
use crate::plot::{ChartSpec, Series};
use crate::table::ResultTable;

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    match cfg.scheme {
        WaveScheme::Leapfrog => leapfrog_gmres(cfg),
        WaveScheme::Hybrid => hybrid_direct(cfg),
    }
}

/// Mesh `(N, N, N+1)` for every `N` in `meshes`; errors in `L∞(0,T; L²)`.
fn leapfrog_gmres(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let mut table =
        ResultTable::new(["mesh", "cells", "nt", "alpha", "iterations", "converged", "error", "time"]);
    let mut history = ResultTable::new(["cells", "alpha", "iteration", "residual"]);
    let mut series = Vec::new();
    let mut failures = Vec::new();
    let kcfg = KrylovConfig::new(cfg.tol, cfg.maxit).map_err(paradiag::ParadiagError::from)?.with_stopping(StoppingNorm::Unpreconditioned);
    for &alpha in &cfg.alphas {
        for &cells in &cfg.meshes {
            let p = make_problem(
                CaseId::Wave2dLeapfrog,
                &ProblemParams { cells, t_final: cfg.t_final, ..ProblemParams::default() },
            )?;
            let nt = cells + 1;
            let dt = cfg.t_final / nt as f64;
            let system = assemble(Scheme::Leapfrog, &p, &TimeGrid::uniform(nt, dt)?)?;
            let (res, secs) = timed(|| wave_gmres_solve(&system, alpha, &kcfg, SolverOptions { conjugate_symmetry: true }));
            let (u, report) = res?;
            let states: Vec<&[f64]> = u.blocks().collect();
            let times: Vec<f64> = (1..=nt).map(|n| n as f64 * dt).collect();
            let error = p.max_l2_error(&states, &times);
            if !report.converged {
                failures.push(format!("cells={cells} alpha={alpha}: {}", report.status));
            }
            for (k, r) in report.residual_history.iter().enumerate() {
                history.push(vec![cells.into(), alpha.into(), k.into(), (*r).into()])?;
            }
            series.push(Series {
                label: format!("N = {cells}, alpha = {alpha}"),
                points: report.residual_history.iter().enumerate().map(|(k, &r)| (k as f64, r)).collect(),
            });
            table.push(vec![
                format!("({cells},{cells},{nt})").into(),
                cells.into(),
                nt.into(),
                alpha.into(),
                report.iterations.into(),
                report.converged.into(),
                error.into(),
                secs.into(),
            ])?;
        }
    }
    table.add_order_column("error", Some("alpha"), "order")?;
    let mut out = ExperimentOutput::new(cfg.experiment, table);
    out.history = Some(history);
    out.failures = failures;
    out.chart = Some((ChartSpec::new("Leap-frog wave: preconditioned GMRES", "iteration", "relative residual").log_y(), series));
    Ok(out)
}

/// Fixed mesh, steps from `nts`; errors in the max norm over all nodes and
/// steps.
fn hybrid_direct(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let p = make_problem(
        CaseId::Wave2dHybrid,
        &ProblemParams { cells: cfg.cells, t_final: cfg.t_final, ..ProblemParams::default() },
    )?;
    let mut table = ResultTable::new(["cells", "nt", "dt", "cond_v", "error", "time"]);
    let mut pts = Vec::new();
    for &nt in &cfg.nts {
        let dt = cfg.t_final / nt as f64;
        let grid = TimeGrid::uniform(nt, dt)?;
        let system = assemble(Scheme::HybridSecondOrder, &p, &grid)?;
        let eigen = chebyshev_eigen(nt, dt, 1e-14)?;
        let (res, secs) = timed(|| direct_solve_wave_hybrid(&system, &eigen));
        let (u, _) = res?;
        let mut error: f64 = 0.0;
        for (state, &t) in u.blocks().zip(&grid.times()[1..]) {
            let exact = p.exact_at(t).expect("the hybrid wave case has an exact solution");
            error = state.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(error, f64::max);
        }
        pts.push((nt as f64, error));
        table.push(vec![cfg.cells.into(), nt.into(), dt.into(), eigen.cond.into(), error.into(), secs.into()])?;
    }
    table.add_order_column("error", None, "order")?;
    let mut out = ExperimentOutput::new(cfg.experiment, table);
    out.chart = Some((
        ChartSpec::new("Hybrid wave scheme: accuracy", "time steps", "max error").log_x().log_y(),
        vec![Series { label: format!("cells = {}", cfg.cells), points: pts }],
    ));
    Ok(out)
}
