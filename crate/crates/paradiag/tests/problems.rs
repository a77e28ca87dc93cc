use std::f64::consts::PI;

use nalgebra::DMatrix;
use paradiag::problems::*;
use paradiag::time_disc::{assemble, TimeGrid};
use paradiag::{ParadiagError, RealBlocks, Scheme, SpaceOperator};

fn dense(a: &SpaceOperator) -> DMatrix<f64> {
    a.to_dense()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn ade_1d_four_nodes_hand_evaluated() {
    // Δx = 1/2: diffusion 4·(−1, 2, −1), advection (−1, 0, 1).
    let a = dense(&ade_1d_periodic(1.0, 4).unwrap());
    let expect = DMatrix::from_row_slice(
        4,
        4,
        &[8.0, -3.0, 0.0, -5.0, -5.0, 8.0, -3.0, 0.0, 0.0, -5.0, 8.0, -3.0, -3.0, 0.0, -5.0, 8.0],
    );
    assert_eq!(a, expect);
}

#[test]
fn ade_1d_constant_in_kernel() {
    for nx in [3usize, 8, 33] {
        let a = ade_1d_periodic(0.37, nx).unwrap();
        assert!(max_abs(&a.mul_vec(&vec![1.0; nx])) < 1e-10);
    }
}

#[test]
fn ade_1d_advection_rows_sum_to_zero() {
    let a = dense(&ade_1d_periodic(1e-3, 10).unwrap());
    // The diffusion stencil is symmetric, so the skew part is pure advection.
    let adv = (&a - a.transpose()) * 0.5;
    for row in adv.row_iter() {
        assert!(row.sum().abs() < 1e-12);
    }
}

#[test]
fn invalid_parameters_rejected() {
    assert!(matches!(ade_1d_periodic(0.0, 8), Err(ParadiagError::InvalidParameter(_))));
    assert!(matches!(ade_1d_periodic(-1.0, 8), Err(ParadiagError::InvalidParameter(_))));
    assert!(ade_1d_periodic(1.0, 2).is_err());
    assert!(ade_2d_periodic(0.0, 4).is_err());
    assert!(laplacian_2d_dirichlet(0).is_err());
    assert!("heat3d".parse::<CaseId>().is_err());
}

#[test]
fn ade_2d_constant_in_kernel() {
    let a = ade_2d_periodic(1e-2, 7).unwrap();
    assert!(max_abs(&a.mul_vec(&vec![1.0; 49])) < 1e-9);
}

#[test]
fn ade_2d_symmetric_part_semidefinite() {
    let a = dense(&ade_2d_periodic(1e-2, 8).unwrap());
    let sym = (&a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    assert!(eig.min() > -1e-10);
}

#[test]
fn ade_2d_is_kronecker_sum_of_1d() {
    let (nu, n) = (0.3, 6);
    let dx = 1.0 / n as f64;
    let mut one_d = DMatrix::zeros(n, n);
    for i in 0..n {
        one_d[(i, i)] = 2.0 * nu / (dx * dx);
        one_d[(i, (i + n - 1) % n)] = -nu / (dx * dx) - 1.0 / (2.0 * dx);
        one_d[(i, (i + 1) % n)] = -nu / (dx * dx) + 1.0 / (2.0 * dx);
    }
    let id = DMatrix::identity(n, n);
    let expect = id.kronecker(&one_d) + one_d.kronecker(&id);
    let got = dense(&ade_2d_periodic(nu, n).unwrap());
    assert!((got - expect).abs().max() < 1e-12);
}

#[test]
fn laplacian_smallest_eigenvalue_near_two_pi_squared() {
    let a = dense(&laplacian_2d_dirichlet(16).unwrap());
    let smallest = a.symmetric_eigenvalues().min();
    let target = 2.0 * PI * PI;
    assert!((smallest - target).abs() / target < 0.05, "{smallest}");
}

#[test]
fn laplacian_is_symmetric() {
    let a = laplacian_2d_dirichlet(5).unwrap();
    assert!(a.is_symmetric());
    let d = dense(&a);
    assert_eq!(d, d.transpose());
}

#[test]
fn laplacian_two_interior_nodes() {
    let a = dense(&laplacian_2d_dirichlet(2).unwrap());
    assert_eq!(a.shape(), (4, 4));
    let h = 1.0 / 3.0;
    for i in 0..4 {
        assert!((a[(i, i)] - 4.0 / (h * h)).abs() < 1e-12);
    }
}

#[test]
fn operators_have_nonnegative_real_spectrum() {
    let ops = [
        ade_1d_periodic(1e-2, 16).unwrap(),
        ade_1d_periodic(1.0, 9).unwrap(),
        ade_2d_periodic(1e-2, 4).unwrap(),
        laplacian_2d_dirichlet(4).unwrap(),
        laplacian_1d_dirichlet(16).unwrap(),
    ];
    for a in &ops {
        let eig = paradiag::linalg::dense_eigenvalues(&a.to_dense()).unwrap();
        assert!(eig.iter().all(|z| z.re > -1e-9));
    }
}

#[test]
fn case_ids_parse() {
    for (s, id) in [
        ("ade1d", CaseId::Ade1d),
        ("ade2d", CaseId::Ade2d),
        ("wave2d_hybrid", CaseId::Wave2dHybrid),
        ("wave2d_leapfrog", CaseId::Wave2dLeapfrog),
        ("optctrl2d", CaseId::OptCtrl2d),
    ] {
        assert_eq!(s.parse::<CaseId>().unwrap(), id);
    }
}

#[test]
fn wave_hybrid_exact_vanishes_initially() {
    let p = make_problem(CaseId::Wave2dHybrid, &ProblemParams { cells: 8, ..Default::default() }).unwrap();
    assert!(max_abs(&p.exact_at(0.0).unwrap()) == 0.0);
    assert!(max_abs(&p.u0) == 0.0);
    assert_eq!(p.u1.as_ref().unwrap().len(), 49);
}

#[test]
fn optctrl_adjoint_vanishes_at_final_time() {
    let params = ProblemParams { cells: 8, t_final: 2.0, gamma: 1e-4, ..Default::default() };
    let p = make_problem(CaseId::OptCtrl2d, &params).unwrap();
    let adj = p.adjoint_exact.as_ref().unwrap();
    assert!(max_abs(&adj(&p.grid, 2.0)) == 0.0);
    assert!(max_abs(&adj(&p.grid, 1.0)) > 0.5);
    assert_eq!(p.gamma, Some(1e-4));
    let bad = ProblemParams { gamma: 0.0, ..params };
    assert!(make_problem(CaseId::OptCtrl2d, &bad).is_err());
}

#[test]
fn ade_1d_initial_peak_at_origin() {
    let p = make_problem(CaseId::Ade1d, &ProblemParams { cells: 64, ..Default::default() }).unwrap();
    let i = p.grid.points.iter().position(|&x| x.abs() < 1e-14).unwrap();
    assert_eq!(p.u0[i], 1.0);
    assert_eq!(p.u0.len(), 64);
    assert!(p.exact.is_none());
}

#[test]
fn vector_lengths_match_operator() {
    for case in [CaseId::Ade1d, CaseId::Ade2d, CaseId::Wave2dHybrid, CaseId::Wave2dLeapfrog, CaseId::OptCtrl2d] {
        let p = make_problem(case, &ProblemParams { cells: 8, ..Default::default() }).unwrap();
        assert_eq!(p.u0.len(), p.nx());
        assert_eq!(p.forcing_at(0.3).len(), p.nx());
        assert_eq!(p.grid.len(), p.nx());
        if let Some(u1) = &p.u1 {
            assert_eq!(u1.len(), p.nx());
        }
    }
}

/// Max-norm residuals of the sampled exact solution in the leap-frog
/// system: the start-up row times `Δt²` and the remaining rows.
fn leapfrog_exact_residual(cells: usize) -> (f64, f64) {
    let p = make_problem(CaseId::Wave2dLeapfrog, &ProblemParams { cells, ..Default::default() }).unwrap();
    let nt = cells + 1;
    let grid = TimeGrid::uniform(nt, p.t_final / nt as f64).unwrap();
    let sys = assemble(Scheme::Leapfrog, &p, &grid).unwrap();
    let states: Vec<Vec<f64>> = grid.times()[1..].iter().map(|&t| p.exact_at(t).unwrap()).collect();
    let u = RealBlocks::from_blocks(&states).unwrap();
    let r = sys.residual(&u).unwrap();
    let dt = p.t_final / nt as f64;
    let rest: Vec<f64> = (1..nt).flat_map(|n| r.block(n).to_vec()).collect();
    (max_abs(r.block(0)) * dt * dt, max_abs(&rest))
}

#[test]
fn exact_solution_residual_is_second_order() {
    let coarse = leapfrog_exact_residual(32);
    let fine = leapfrog_exact_residual(64);
    let start = (coarse.0 / fine.0).log2();
    let interior = (coarse.1 / fine.1).log2();
    assert!(start > 2.5, "start-up order {start}");
    assert!(interior > 1.8, "interior order {interior}");
}

#[test]
fn exact_solutions_satisfy_the_pde() {
    // Central differences of the continuous solution in time; the space
    // operator is exact for the bubble up to O(h²).
    let p = make_problem(CaseId::Wave2dLeapfrog, &ProblemParams { cells: 64, ..Default::default() }).unwrap();
    let (t, dt) = (0.7, 1e-3);
    let u = |s: f64| p.exact_at(s).unwrap();
    let (um, u0, up) = (u(t - dt), u(t), u(t + dt));
    let au = p.operator.mul_vec(&u0);
    let f = p.forcing_at(t);
    let res: Vec<f64> = (0..p.nx()).map(|k| (up[k] - 2.0 * u0[k] + um[k]) / (dt * dt) + au[k] - f[k]).collect();
    assert!(max_abs(&res) < 2e-2 * max_abs(&f));
}
