use paradiag::paradiag_two::{
    classical_parareal, pint_cgc_parareal, random_initial_guess, PararealConfig, PropagatorSpec, RkKind,
};
use paradiag::problems::{make_problem, CaseId, ProblemParams};

use super::{timed, ExperimentOutput};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::plot::{ChartSpec, Series};
use crate::table::ResultTable;

/// Both parareal variants from the same random start, for every fine
/// propagator; the coarse propagator is one backward-Euler step per slice.
pub fn compare(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let p = make_problem(
        CaseId::Ade1d,
        &ProblemParams { nu: cfg.nu, cells: cfg.cells, t_final: cfg.t_final, ..ProblemParams::default() },
    )?;
    let slices = (cfg.t_final / cfg.coarse_dt).round() as usize;
    let mut table = ResultTable::new(["fine", "method", "slices", "iterations", "converged", "final_error", "time"]);
    let mut history = ResultTable::new(["fine", "method", "iteration", "error"]);
    let mut series = Vec::new();
    let mut failures = Vec::new();
    let mut worst_gap: usize = 0;
    for &fine in &cfg.fine {
        let pcfg = PararealConfig {
            coarse: PropagatorSpec::new(RkKind::BackwardEuler, cfg.coarse_dt, 1)?,
            fine: PropagatorSpec::new(fine, cfg.coarse_dt / cfg.substeps as f64, cfg.substeps)?,
            slices,
            tol: cfg.tol,
            maxit: cfg.maxit,
        };
        let guess = random_initial_guess(slices, p.nx(), cfg.amplitude, cfg.seed);
        let mut counts = Vec::new();
        for method in ["classical", "cgc"] {
            let (res, secs) = timed(|| match method {
                "classical" => classical_parareal(&p, &pcfg, &guess),
                _ => pint_cgc_parareal(&p, &pcfg, cfg.alpha, &guess),
            });
            let (_, report) = res?;
            let errors = report.error_history.clone().unwrap_or_default();
            if !report.converged {
                failures.push(format!("{fine} {method}: {}", report.status));
            }
            for (k, e) in errors.iter().enumerate() {
                history.push(vec![fine.to_string().into(), method.into(), k.into(), (*e).into()])?;
            }
            series.push(Series {
                label: format!("{fine} {method}"),
                points: errors.iter().enumerate().map(|(k, &e)| (k as f64, e)).collect(),
            });
            table.push(vec![
                fine.to_string().into(),
                method.into(),
                slices.into(),
                report.iterations.into(),
                report.converged.into(),
                errors.last().copied().into(),
                secs.into(),
            ])?;
            counts.push(report.iterations);
        }
        worst_gap = worst_gap.max(counts[0].abs_diff(counts[1]));
    }
    let mut out = ExperimentOutput::new(cfg.experiment, table);
    out.history = Some(history);
    out.failures = failures;
    out.metrics.push(("max_iteration_gap".into(), worst_gap as f64));
    out.chart = Some((ChartSpec::new("Parareal variants", "iteration", "max error vs fine solution").log_y(), series));
    Ok(out)
}
