//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails for a reason other than a documented
//! limitation of the host or of the measurement norm.

use std::time::Instant;

use krylov::gmres;
use paradiag::paradiag_one::chebyshev_eigen;
use paradiag::paradiag_two::{
    nonlinear_newton_solve, optctrl_eigenvector_matrix, random_initial_guess, sequential_nonlinear_theta, wr_solve,
    CubicDecay, JacobianAveraging, NewtonConfig, NonlinearThetaProblem, OptCtrlPreconditioner, StationaryConfig,
};
use paradiag::problems::{ade_1d_periodic, laplacian_1d_dirichlet, make_problem, CaseId, ProblemParams};
use paradiag::spectral::{weighted_forward_transform, weighted_inverse_transform};
use paradiag::time_disc::{
    assemble, assemble_optctrl_problem, assemble_theta_system, circulant_modify_theta, hybrid_matrix,
    hybrid_second_order_matrix, sequential_solve, sequential_theta,
};
use paradiag::{AlphaCirculantSolver, KrylovConfig, RealBlocks, Scheme, SolverOptions, SpaceOperator, TimeGrid};
use paradiag_harness::{run_experiment, Experiment, ExperimentConfig, ExperimentOutput, ResultTable};

type Check = Result<Outcome, Box<dyn std::error::Error>>;

struct Outcome {
    pass: bool,
    detail: String,
    /// Why a failure is expected on this host or under this norm; `None`
    /// makes any failure count.
    known_limit: Option<String>,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail, known_limit: None }
    }
}

fn run(exp: Experiment, sets: &[&str]) -> Result<ExperimentOutput, Box<dyn std::error::Error>> {
    let mut overrides: Vec<String> = sets.iter().map(|s| s.to_string()).collect();
    overrides.push("plot=false".into());
    Ok(run_experiment(&ExperimentConfig::resolve(exp, None, &overrides)?)?)
}

fn floats(t: &ResultTable, col: &str) -> Vec<f64> {
    t.floats(col).unwrap_or_default().into_iter().map(|v| v.unwrap_or(f64::NAN)).collect()
}

fn ints(t: &ResultTable, col: &str) -> Vec<i64> {
    t.column(col).unwrap_or_default().into_iter().map(|v| v.as_i64().unwrap_or(-1)).collect()
}

fn all_true(t: &ResultTable, col: &str) -> bool {
    t.column(col).unwrap_or_default().iter().all(|v| v.as_bool() == Some(true))
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let den = b.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    if den > 0.0 { num / den } else { num }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

fn wave_gmres_table() -> Check {
    let start = Instant::now();
    let small = run(Experiment::WaveGmres, &["meshes=32, 64", "alphas=0.1, 1"])?.table;
    let large = run(Experiment::WaveGmres, &["meshes=128", "alphas=1"])?.table;
    let secs = start.elapsed().as_secs_f64();
    let it = ints(&small, "iterations");
    let err = floats(&small, "error");
    let it128 = ints(&large, "iterations")[0];
    let pass = it == [3, 3, 3, 7]
        && within(err[0], 7.17e-3, 0.02)
        && within(err[1], 1.86e-3, 0.02)
        && it128 >= 30
        && all_true(&small, "converged")
        && secs < 120.0;
    Ok(Outcome::new(
        pass,
        format!(
            "alpha=0.1: {}/{} its, errors {:.3e}/{:.3e}; alpha=1: {}/{} its; 128 mesh: {it128} its; {secs:.0} s",
            it[0], it[1], err[0], err[1], it[2], it[3]
        ),
    ))
}

fn optimal_control_table() -> Check {
    let start = Instant::now();
    let t = run(Experiment::OptCtrl, &["meshes=16, 32"])?.table;
    let secs = start.elapsed().as_secs_f64();
    let it = ints(&t, "iterations");
    let expected = [5, 5, 5, 4, 4, 5, 5, 5, 5, 4];
    let pass = it == expected && all_true(&t, "converged") && secs < 60.0;
    Ok(Outcome::new(pass, format!("iterations {it:?} vs {expected:?}; {secs:.1} s")))
}

/// Largest ratio of consecutive errors `max_n ‖u^k_n − u_n‖₂` above `floor`.
fn l2_time_max_ratios(nu: f64, alpha: f64, iterations: usize, relative_floor: f64) -> Result<f64, Box<dyn std::error::Error>> {
    let cells = 128;
    let nt = 64;
    let p = make_problem(CaseId::Ade1d, &ProblemParams { nu, cells, t_final: 1.0, ..ProblemParams::default() })?;
    let nx = p.nx();
    let grid = TimeGrid::uniform(nt, 1.0 / nt as f64)?;
    let zero = |_: f64| vec![0.0; nx];
    let sys = assemble_theta_system(0.5, &grid, &p.operator, &p.u0, zero)?;
    let reference = sequential_theta(0.5, &grid, &p.operator, &p.u0, zero)?;
    let guess = random_initial_guess(nt, nx, 20.0, 2021);
    let err = |u: &RealBlocks| {
        u.blocks()
            .zip(reference.blocks())
            .map(|(a, b)| {
                let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                p.grid.l2_norm(&diff)
            })
            .fold(0.0, f64::max)
    };
    let mut errors = vec![err(&guess)];
    for k in 1..=iterations {
        let (u, _) = wr_solve(&sys, alpha, &StationaryConfig::new(1e-300, k)?, &guess, None)?;
        errors.push(err(&u));
    }
    // Ratios taken near rounding level say nothing about the contraction.
    let floor = errors[0] * relative_floor;
    Ok(errors.windows(2).filter(|w| w[1] > floor).map(|w| w[1] / w[0]).fold(0.0, f64::max))
}

fn wr_contraction() -> Check {
    let alpha = 1e-2;
    let out = run(Experiment::AdeWr, &["nus=1e-2, 1e-4", "thetas=0.5", "cells=128", "nt=64", "t_final=1", "alpha=1e-2", "tol=1e-12"])?;
    let t = &out.table;
    let bound = alpha / (1.0 - alpha);
    let ratios = floats(t, "max_ratio");
    let hits = ints(t, "iterations_to_tol");
    let predicted = ints(t, "predicted_iterations");
    let ratio_ok: Vec<bool> = ratios.iter().map(|&r| r <= bound * 1.05).collect();
    let count_ok: Vec<bool> = hits.iter().zip(&predicted).map(|(&h, &p)| h >= 0 && h <= p + 2).collect();
    let pass = ratio_ok.iter().all(|&b| b) && count_ok.iter().all(|&b| b);
    let l2 = [l2_time_max_ratios(1e-2, alpha, 5, 1e-10)?, l2_time_max_ratios(1e-4, alpha, 5, 1e-10)?];
    let mut outcome = Outcome::new(
        pass,
        format!(
            "max-norm ratios {:.4}/{:.4} vs {:.4}; iterations to 1e-12 {:?} vs predicted+2 {:?}; sup-in-time l2 ratios {:.4}/{:.4}",
            ratios[0],
            ratios[1],
            bound * 1.05,
            hits,
            predicted.iter().map(|p| p + 2).collect::<Vec<_>>(),
            l2[0],
            l2[1]
        ),
    );
    // Central advection at nu = 1e-4 has no discrete maximum principle, so
    // the error map is not a max-norm contraction even though it is one in
    // l2. Only that specific failure is expected.
    if !pass && ratio_ok[0] && count_ok.iter().all(|&b| b) && l2.iter().all(|&r| r <= bound * 1.05) {
        outcome.known_limit =
            Some("nu=1e-4 first-sweep ratio exceeds the bound in the componentwise max norm only".into());
    }
    Ok(outcome)
}

fn ade_2d_robustness() -> Check {
    let start = Instant::now();
    let t = run(
        Experiment::AdeWr,
        &["dim=2", "cells=64", "nt=128", "t_final=2", "alpha=0.02", "tol=1e-6", "thetas=1, 0.5", "nus=1, 1e-2, 1e-4", "amplitude=0", "maxit=30"],
    )?
    .table;
    let secs = start.elapsed().as_secs_f64();
    let it = ints(&t, "iterations");
    let theta = floats(&t, "theta");
    let spread_ok = [1.0, 0.5].iter().all(|&th| {
        let counts: Vec<i64> = it.iter().zip(&theta).filter(|(_, &x)| x == th).map(|(&i, _)| i).collect();
        counts.iter().max().unwrap_or(&0) - counts.iter().min().unwrap_or(&0) <= 1
    });
    let pass = all_true(&t, "converged") && it.iter().all(|&i| (1..=6).contains(&i)) && spread_ok && secs < 300.0;
    Ok(Outcome::new(pass, format!("iterations (nu x theta) {it:?}; {secs:.0} s")))
}

fn spectrum_theorem() -> Check {
    let t = run(Experiment::SpectrumProbe, &["sizes=8x8, 16x12", "alphas=0.1, 0.3"])?.table;
    let units = ints(&t, "unit_count");
    let expected = ints(&t, "expected_unit_count");
    let (dmin, dmax) = (floats(&t, "dist_min"), floats(&t, "dist_max"));
    let (lo, hi) = (floats(&t, "annulus_lo"), floats(&t, "annulus_hi"));
    let matched = floats(&t, "max_match_error");
    let pass = units == expected
        && (0..t.len()).all(|i| dmin[i] >= lo[i] && dmax[i] <= hi[i] && matched[i] <= 1e-8)
        && t.len() == 4;
    Ok(Outcome::new(
        pass,
        format!("unit eigenvalues {units:?} (expected {expected:?}); worst match {:.1e}", matched.iter().fold(0.0f64, |a, &b| a.max(b))),
    ))
}

fn hybrid_eigendecomposition() -> Check {
    let mut worst: f64 = 0.0;
    let mut residual_ok = true;
    let mut square_exact = true;
    for nt in [8usize, 32, 128] {
        let dt = 1.0 / nt as f64;
        let e = chebyshev_eigen(nt, dt, 1e-14)?;
        let r = e.diagonalization_residual()?;
        residual_ok &= r <= 1e-11 * e.cond;
        worst = worst.max(r / e.cond);
        let b = hybrid_matrix(nt, dt)?;
        square_exact &= hybrid_second_order_matrix(nt, dt)?.to_dense() == b.matmul(&b)?.to_dense();
    }
    let slope = run(Experiment::CondStudy, &["nts=8, 16, 32, 64, 128, 256, 512"])?.metric("cond_slope").unwrap_or(f64::NAN);
    let pass = residual_ok && square_exact && (1.5..=2.1).contains(&slope);
    Ok(Outcome::new(
        pass,
        format!("max residual/cond {worst:.1e}; cond slope {slope:.3}; B_2nd == B*B exactly: {square_exact}"),
    ))
}

fn direct_solver_equivalence() -> Check {
    let geo = run(Experiment::AdeDirect, &["tau=1.2", "nts=16", "thetas=1, 0.5"])?.table;
    let hyb = run(Experiment::AdeHybrid, &["nts=32, 256"])?.table;
    let wave = run(Experiment::WaveGmres, &["scheme=hybrid", "cells=16", "nts=32, 64, 128, 256"])?.table;
    let geo_diff = floats(&geo, "diff_sequential");
    let hyb_diff = floats(&hyb, "diff_sequential");
    let orders: Vec<f64> = floats(&wave, "order").into_iter().filter(|o| o.is_finite()).collect();
    let pass = geo_diff.iter().chain(&hyb_diff).all(|&d| d <= 1e-7)
        && orders.len() == 3
        && orders.iter().all(|o| (o - 2.0).abs() <= 0.2);
    Ok(Outcome::new(
        pass,
        format!(
            "geometric diffs {:?}; hybrid diffs {:?}; wave orders {:?}",
            geo_diff.iter().map(|d| format!("{d:.1e}")).collect::<Vec<_>>(),
            hyb_diff.iter().map(|d| format!("{d:.1e}")).collect::<Vec<_>>(),
            orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>()
        ),
    ))
}

fn parareal_equivalence() -> Check {
    let out = run(Experiment::PararealCompare, &["nu=0.1", "t_final=4", "cells=128", "coarse_dt=0.0625", "substeps=32", "alpha=0.1"])?;
    let t = &out.table;
    let gap = out.metric("max_iteration_gap").unwrap_or(f64::INFINITY);
    let pass = gap <= 1.0 && all_true(t, "converged");
    Ok(Outcome::new(pass, format!("iterations {:?}; largest classical/cgc gap {gap}", ints(t, "iterations"))))
}

fn control_factorization() -> Check {
    let mut unitarity: f64 = 0.0;
    for nt in [8usize, 32] {
        let v = optctrl_eigenvector_matrix(nt)?;
        let prod = &v * v.adjoint();
        let mut sq = 0.0;
        for i in 0..2 * nt {
            for j in 0..2 * nt {
                let target = if i == j { 1.0 } else { 0.0 };
                sq += (prod[(i, j)] / 2.0 - target).norm_sqr();
            }
        }
        unitarity = unitarity.max(sq.sqrt());
    }
    let p = make_problem(CaseId::OptCtrl2d, &ProblemParams { cells: 4, gamma: 1e-4, ..ProblemParams::default() })?;
    let system = assemble_optctrl_problem(&p, 4)?;
    let pre = OptCtrlPreconditioner::new(&system, 1.0)?;
    let dense = pre.dense_matrix(&system.a)?;
    let rhs = random_initial_guess(2 * 4, system.a.nx(), 1.0, 7);
    let structured = pre.apply_inverse(rhs.as_slice())?;
    let expect = paradiag::linalg::dense_solve(&dense, rhs.as_slice())?;
    let lu_diff = rel_diff(&structured, &expect);
    let pass = unitarity <= 1e-13 && lu_diff <= 1e-10 && system.a.nx() == 9;
    Ok(Outcome::new(pass, format!("||V V*/2 - I||_F = {unitarity:.1e}; structured vs dense LU {lu_diff:.1e}")))
}

fn scaling() -> Check {
    let out = run(Experiment::ScalingBench, &["dim=2", "cells=64", "nt=256", "thread_counts=1, 2, 4", "repeats=3"])?;
    let nx = ints(&out.table, "nx")[0];
    let speedup = out.metric("speedup_4").unwrap_or(0.0);
    let diff = out.metric("max_diff_one_thread").unwrap_or(f64::INFINITY);
    let cores = out.metric("available_parallelism").unwrap_or(1.0);
    let pass = nx == 4096 && speedup >= 2.0 && diff <= 1e-12;
    let mut outcome =
        Outcome::new(pass, format!("nx={nx}, speedup at 4 threads {speedup:.2}, deviation {diff:.1e}, {cores} core(s)"));
    if !pass && cores < 4.0 && diff <= 1e-12 && nx == 4096 {
        outcome.known_limit = Some(format!("host exposes {cores} core(s); 4-thread speedup is not measurable"));
    }
    Ok(outcome)
}

fn property_suites() -> Check {
    let mut notes = Vec::new();

    // Weighted transform round trip and P_α⁻¹P_α = I.
    let mut spectral: f64 = 0.0;
    for (i, (nt, nx)) in [(1usize, 3usize), (2, 4), (5, 3), (8, 6), (13, 5), (16, 7), (23, 4)].into_iter().enumerate() {
        for alpha in [0.01, 0.1, 0.5, 1.0] {
            let v = random_initial_guess(nt, nx, 1.0, i as u64);
            let back = weighted_inverse_transform(&weighted_forward_transform(&v, alpha)?, alpha)?.into_real_checked(1e-10)?;
            spectral = spectral.max(rel_diff(back.as_slice(), v.as_slice()));
            if nt >= 2 {
                let k = laplacian_1d_dirichlet(nx)?;
                let pair = paradiag::AlphaCirculantPair::new(
                    [vec![1.0, -1.0], vec![0.0; nt - 2]].concat(),
                    [vec![0.1], vec![0.0; nt - 1]].concat(),
                    alpha,
                )?;
                let solver = AlphaCirculantSolver::new(pair, &SpaceOperator::identity(nx), &k, SolverOptions::default())?;
                let w = solver.apply(&solver.apply_inverse(&v)?)?;
                spectral = spectral.max(rel_diff(w.as_slice(), v.as_slice()));
            }
        }
    }
    notes.push(format!("spectral {spectral:.1e}"));

    // All-at-once solves against sequential stepping, every scheme.
    let mut all_at_once: f64 = 0.0;
    for nt in [3usize, 8, 16] {
        let ade = make_problem(CaseId::Ade1d, &ProblemParams { nu: 0.05, cells: 12, t_final: 0.5, ..ProblemParams::default() })?;
        let wave_hyb = make_problem(CaseId::Wave2dHybrid, &ProblemParams { cells: 4, ..ProblemParams::default() })?;
        let wave_lf = make_problem(CaseId::Wave2dLeapfrog, &ProblemParams { cells: 4, ..ProblemParams::default() })?;
        for (scheme, p) in [
            (Scheme::Theta(1.0), &ade),
            (Scheme::Theta(0.5), &ade),
            (Scheme::Theta(0.75), &ade),
            (Scheme::Hybrid, &ade),
            (Scheme::HybridSecondOrder, &wave_hyb),
            (Scheme::Leapfrog, &wave_lf),
        ] {
            let grid = TimeGrid::uniform(nt, p.t_final / nt as f64)?;
            let sys = assemble(scheme, p, &grid)?;
            let seq = sequential_solve(scheme, p, &grid)?;
            all_at_once = all_at_once.max(rel_diff(sys.solve_direct()?.as_slice(), seq.as_slice()));
        }
    }
    notes.push(format!("all-at-once {all_at_once:.1e}"));

    // Unrestarted GMRES terminates within n steps.
    let mut gmres_ok = true;
    for n in [1usize, 2, 7, 16, 33, 64] {
        let entries = random_initial_guess(n, n, 1.0, n as u64);
        let a = |x: &[f64]| -> Result<Vec<f64>, krylov::KrylovError> {
            Ok((0..n)
                .map(|i| entries.block(i).iter().zip(x).map(|(aij, xj)| aij / (n as f64).sqrt() * xj).sum::<f64>() + 2.0 * x[i])
                .collect())
        };
        let b = random_initial_guess(1, n, 1.0, 100 + n as u64).into_vec();
        let (x, report) = gmres(a, |r: &[f64]| Ok(r.to_vec()), &b, &vec![0.0; n], &KrylovConfig::new(1e-10, n)?)?;
        let ax = a(&x)?;
        let res = ax.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
            / b.iter().map(|q| q * q).sum::<f64>().sqrt();
        gmres_ok &= report.iterations <= n && res <= 1e-9;
    }
    notes.push(format!("gmres finite termination {gmres_ok}"));

    // Simplified Newton against per-step Newton on u' = -u³.
    let mut newton: f64 = 0.0;
    let field = CubicDecay { nx: 1 };
    for theta in [1.0, 0.5] {
        let problem = NonlinearThetaProblem {
            theta,
            grid: TimeGrid::uniform(32, 1.0 / 32.0)?,
            mass: SpaceOperator::identity(1),
            field: &field,
            u0: vec![1.0],
        };
        let seq = sequential_nonlinear_theta(&problem, 1e-14)?;
        for averaging in [JacobianAveraging::MeanJacobian, JacobianAveraging::JacobianOfMean] {
            let (u, report) = nonlinear_newton_solve(&problem, &NewtonConfig { averaging, ..NewtonConfig::default() })?;
            newton = newton.max(if report.converged { u.max_abs_diff(&seq) } else { f64::INFINITY });
        }
    }
    notes.push(format!("newton {newton:.1e}"));

    // A stationary sweep from the exact solution stays put.
    let a = ade_1d_periodic(1e-2, 16)?;
    let grid = TimeGrid::uniform(8, 0.125)?;
    let u0: Vec<f64> = (0..16).map(|i| (i as f64 * 0.4).sin()).collect();
    let sys = assemble_theta_system(1.0, &grid, &a, &u0, |_| vec![0.0; 16])?;
    let exact = sys.solve_direct()?;
    let pair = circulant_modify_theta(&sys, 0.1)?;
    let solver = AlphaCirculantSolver::new(pair, &sys.mass, &sys.stiffness, SolverOptions::default())?;
    let mut r = sys.residual(&exact)?;
    r = solver.apply_inverse(&r)?;
    let fixed_point = r.max_abs() / exact.max_abs();
    notes.push(format!("fixed point {fixed_point:.1e}"));

    let pass = spectral <= 1e-10 && all_at_once <= 1e-10 && gmres_ok && newton <= 1e-8 && fixed_point <= 1e-12;
    Ok(Outcome::new(pass, notes.join("; ")))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("wave GMRES table", wave_gmres_table),
        ("optimal-control table", optimal_control_table),
        ("WR contraction bound", wr_contraction),
        ("2D ADE iteration robustness", ade_2d_robustness),
        ("leap-frog spectrum", spectrum_theorem),
        ("hybrid eigendecomposition", hybrid_eigendecomposition),
        ("direct-solver equivalence", direct_solver_equivalence),
        ("parareal variant equivalence", parareal_equivalence),
        ("optimal-control factorization", control_factorization),
        ("local scaling", scaling),
        ("property suites", property_suites),
    ];
    let mut unexpected = 0;
    let mut known = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict} {name} ({secs:.1} s): {}", i + 1, outcome.detail);
        if !outcome.pass {
            match &outcome.known_limit {
                Some(why) => {
                    println!("             known limitation: {why}");
                    known += 1;
                }
                None => unexpected += 1,
            }
        }
    }
    let passed = criteria.len() - unexpected - known;
    println!("acceptance: {passed}/{} passed, {known} known limitation(s), {unexpected} unexpected failure(s)", criteria.len());
    if unexpected > 0 {
        std::process::exit(1);
    }
}
