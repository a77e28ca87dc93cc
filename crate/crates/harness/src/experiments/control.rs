use paradiag::paradiag_two::optctrl_solve;
use paradiag::problems::{make_problem, CaseId, Field, ProblemInstance, ProblemParams};
use paradiag::time_disc::assemble_optctrl_problem;
use paradiag::{KrylovConfig, RealBlocks};

use super::{timed, ExperimentOutput};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::table::ResultTable;

/// `maxₙ ‖Xₙ − x(tₙ)‖_{L²}` with `tₙ = (n + offset)·Δt`.
fn trajectory_error(p: &ProblemInstance, field: &Field, x: &RealBlocks, dt: f64, offset: usize) -> f64 {
    x.blocks()
        .enumerate()
        .map(|(n, xn)| {
            let exact = field(&p.grid, (n + offset) as f64 * dt);
            let diff: Vec<f64> = xn.iter().zip(&exact).map(|(a, b)| a - b).collect();
            p.grid.l2_norm(&diff)
        })
        .fold(0.0, f64::max)
}

/// Mesh `(N, N, N+1)` for every `N` in `meshes` and every `γ` in `gammas`.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let mut table = ResultTable::new([
        "mesh",
        "cells",
        "nt",
        "gamma",
        "iterations",
        "converged",
        "state_error",
        "adjoint_error",
        "time",
    ]);
    let mut failures = Vec::new();
    let kcfg = KrylovConfig::new(cfg.tol, cfg.maxit).map_err(paradiag::ParadiagError::from)?;
    for &cells in &cfg.meshes {
        for &gamma in &cfg.gammas {
            let p = make_problem(
                CaseId::OptCtrl2d,
                &ProblemParams { cells, gamma, t_final: cfg.t_final, ..ProblemParams::default() },
            )?;
            let nt = cells + 1;
            let system = assemble_optctrl_problem(&p, nt)?;
            let (res, secs) = timed(|| optctrl_solve(&system, &kcfg, 1.0));
            let sol = res?;
            let exact = p.exact.as_ref().expect("the control case has an exact state");
            let adjoint = p.adjoint_exact.as_ref().expect("the control case has an exact adjoint");
            let state_error = trajectory_error(&p, exact, &sol.state, system.dt, 1);
            let adjoint_error = trajectory_error(&p, adjoint, &sol.adjoint, system.dt, 0);
            if !sol.report.converged {
                failures.push(format!("cells={cells} gamma={gamma:e}: {}", sol.report.status));
            }
            table.push(vec![
                format!("({cells},{cells},{nt})").into(),
                cells.into(),
                nt.into(),
                gamma.into(),
                sol.report.iterations.into(),
                sol.report.converged.into(),
                state_error.into(),
                adjoint_error.into(),
                secs.into(),
            ])?;
        }
    }
    let mut out = ExperimentOutput::new(cfg.experiment, table);
    out.failures = failures;
    Ok(out)
}
