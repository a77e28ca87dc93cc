use paradiag::paradiag_two::random_initial_guess;
use paradiag::problems::{make_problem, CaseId, ProblemParams};
use paradiag::time_disc::{assemble_theta_system, circulant_modify_theta};
use paradiag::{AlphaCirculantSolver, RealBlocks, SolverOptions, TimeGrid};

use super::{relative_diff, timed, zero_forcing, ExperimentOutput};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::plot::{ChartSpec, Series};
use crate::table::ResultTable;

/// Factorizes the shifted systems of one `P_α` (half of them, by conjugate
/// symmetry) and applies `P_α⁻¹` once,
/// on a fresh pool for every entry of `thread_counts`. Reports the best of
/// `repeats` wall times, the speedup over one thread, and the deviation
/// from the one-thread solution.
pub fn scaling_bench(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let case = if cfg.dim == 2 { CaseId::Ade2d } else { CaseId::Ade1d };
    let p = make_problem(case, &ProblemParams { nu: cfg.nu, cells: cfg.cells, t_final: cfg.t_final, ..ProblemParams::default() })?;
    let nx = p.nx();
    let theta = cfg.thetas.first().copied().unwrap_or(1.0);
    let grid = TimeGrid::uniform(cfg.nt, cfg.t_final / cfg.nt as f64)?;
    let system = assemble_theta_system(theta, &grid, &p.operator, &p.u0, zero_forcing(nx))?;
    let pair = circulant_modify_theta(&system, cfg.alpha)?;
    let rhs = random_initial_guess(cfg.nt, nx, 1.0, cfg.seed);

    let solve_once = || -> Result<RealBlocks> {
        let solver = AlphaCirculantSolver::new(pair.clone(), &system.mass, &system.stiffness, SolverOptions { conjugate_symmetry: true })?;
        Ok(solver.apply_inverse(&rhs)?)
    };

    let mut runs = Vec::new();
    for &threads in &cfg.thread_counts {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        let mut best = f64::INFINITY;
        let mut solution = None;
        for _ in 0..cfg.repeats {
            let (u, secs) = pool.install(|| timed(solve_once));
            solution = Some(u?);
            best = best.min(secs);
        }
        runs.push((threads, best, solution.expect("repeats >= 1")));
    }
    let (_, base_time, base) = runs.iter().find(|(t, _, _)| *t == 1).expect("validated: thread_counts contains 1");

    let mut table = ResultTable::new(["threads", "nt", "nx", "time", "speedup", "diff_one_thread"]);
    let mut pts = Vec::new();
    let mut out_metrics = Vec::new();
    let mut worst_diff: f64 = 0.0;
    for (threads, secs, u) in &runs {
        let speedup = base_time / secs;
        let diff = relative_diff(u, base);
        worst_diff = worst_diff.max(diff);
        pts.push((*threads as f64, speedup));
        out_metrics.push((format!("speedup_{threads}"), speedup));
        table.push(vec![(*threads).into(), cfg.nt.into(), nx.into(), (*secs).into(), speedup.into(), diff.into()])?;
    }
    let mut out = ExperimentOutput::new(cfg.experiment, table);
    out.metrics = out_metrics;
    out.metrics.push(("max_diff_one_thread".into(), worst_diff));
    out.metrics.push(("available_parallelism".into(), std::thread::available_parallelism().map_or(1, |n| n.get()) as f64));
    out.chart = Some((
        ChartSpec::new("Shifted-solve stage: speedup", "threads", "speedup"),
        vec![Series { label: String::new(), points: pts }],
    ));
    Ok(out)
}
