use paradiag::paradiag_one::chebyshev_eigen;
use paradiag::paradiag_two::{
    check_leapfrog_spectrum, nonlinear_newton_solve, sequential_nonlinear_theta, spectrum_probe, CubicDecay,
    NewtonConfig, NonlinearThetaProblem,
};
use paradiag::problems::laplacian_1d_dirichlet;
use paradiag::time_disc::assemble_leapfrog_system;
use paradiag::{SpaceOperator, TimeGrid};

use super::{loglog_slope, relative_diff, timed, zero_forcing, ExperimentOutput};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::plot::{ChartSpec, Series};
use crate::table::{ResultTable, Value};

/// `Cond₂(V)` of the hybrid eigenvector matrix, the diagonalization
/// residual, and the fitted growth exponent.
pub fn conditioning(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let mut table = ResultTable::new(["nt", "cond_v", "residual", "residual_bound", "time"]);
    let mut pts = Vec::new();
    for &nt in &cfg.nts {
        let dt = cfg.t_final / nt as f64;
        let (eigen, secs) = timed(|| chebyshev_eigen(nt, dt, 1e-14));
        let eigen = eigen?;
        let residual = eigen.diagonalization_residual()?;
        pts.push((nt as f64, eigen.cond));
        table.push(vec![nt.into(), eigen.cond.into(), residual.into(), (1e-11 * eigen.cond).into(), secs.into()])?;
    }
    let mut out = ExperimentOutput::new(cfg.experiment, table);
    if let Some(slope) = loglog_slope(&pts) {
        out.metrics.push(("cond_slope".into(), slope));
    }
    out.chart = Some((
        ChartSpec::new("Conditioning of the hybrid eigenvectors", "time steps", "Cond2(V)").log_x().log_y(),
        vec![Series { label: String::new(), points: pts }],
    ));
    Ok(out)
}

/// Dense spectra of preconditioned 1D leap-frog systems against the
/// predicted values; `dt = t_final / nt`.
pub fn spectrum(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let mut table = ResultTable::new([
        "nx",
        "nt",
        "alpha",
        "unit_count",
        "expected_unit_count",
        "dist_min",
        "dist_max",
        "annulus_lo",
        "annulus_hi",
        "max_match_error",
        "holds",
    ]);
    for &(nx, nt) in &cfg.sizes {
        let a = laplacian_1d_dirichlet(nx)?;
        let zero = vec![0.0; nx];
        let system = assemble_leapfrog_system(nt, cfg.t_final / nt as f64, &a, &zero, &zero, zero_forcing(nx))?;
        for &alpha in &cfg.alphas {
            let eig = spectrum_probe(&system, alpha)?;
            let check = check_leapfrog_spectrum(&system, alpha, &eig)?;
            let finite = |v: f64| if v.is_finite() { Value::Float(v) } else { Value::Empty };
            let (lo, hi) = check.annulus.map_or((Value::Empty, Value::Empty), |(l, h)| (l.into(), h.into()));
            table.push(vec![
                nx.into(),
                nt.into(),
                alpha.into(),
                check.unit_count.into(),
                check.expected_unit_count.into(),
                finite(check.distance_range.0),
                finite(check.distance_range.1),
                lo,
                hi,
                check.max_match_error.into(),
                check.holds.into(),
            ])?;
        }
    }
    Ok(ExperimentOutput::new(cfg.experiment, table))
}

/// `u' = −u³` componentwise on `cells` unknowns with `u₀ᵢ = 1 + i/cells`.
pub fn nonlinear(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let nx = cfg.cells;
    let field = CubicDecay { nx };
    let u0: Vec<f64> = (0..nx).map(|i| 1.0 + i as f64 / nx as f64).collect();
    let grid = TimeGrid::uniform(cfg.nt, cfg.t_final / cfg.nt as f64)?;
    let mut table = ResultTable::new(["theta", "averaging", "alpha", "iterations", "converged", "diff_sequential", "time"]);
    let mut history = ResultTable::new(["theta", "averaging", "iteration", "residual"]);
    let mut series = Vec::new();
    let mut failures = Vec::new();
    for &theta in &cfg.thetas {
        let problem = NonlinearThetaProblem {
            theta,
            grid: grid.clone(),
            mass: SpaceOperator::identity(nx),
            field: &field,
            u0: u0.clone(),
        };
        let seq = sequential_nonlinear_theta(&problem, 1e-14)?;
        for &averaging in &cfg.averaging {
            let ncfg = NewtonConfig { alpha: cfg.alpha, tol: cfg.tol, maxit: cfg.maxit, averaging, ..NewtonConfig::default() };
            let (res, secs) = timed(|| nonlinear_newton_solve(&problem, &ncfg));
            let (u, report) = res?;
            if !report.converged {
                failures.push(format!("theta={theta} {averaging}: {}", report.status));
            }
            for (k, r) in report.residual_history.iter().enumerate() {
                history.push(vec![theta.into(), averaging.to_string().into(), k.into(), (*r).into()])?;
            }
            series.push(Series {
                label: format!("theta = {theta}, {averaging}"),
                points: report.residual_history.iter().enumerate().map(|(k, &r)| (k as f64, r)).collect(),
            });
            table.push(vec![
                theta.into(),
                averaging.to_string().into(),
                cfg.alpha.into(),
                report.iterations.into(),
                report.converged.into(),
                relative_diff(&u, &seq).into(),
                secs.into(),
            ])?;
        }
    }
    let mut out = ExperimentOutput::new(cfg.experiment, table);
    out.history = Some(history);
    out.failures = failures;
    out.chart = Some((ChartSpec::new("Simplified Newton", "iteration", "relative residual").log_y(), series));
    Ok(out)
}
