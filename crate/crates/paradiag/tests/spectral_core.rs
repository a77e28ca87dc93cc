mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use paradiag::problems::ade_1d_periodic;
use paradiag::shift::ShiftFactorCache;
use paradiag::spectral::*;
use paradiag::time_matrix::TimeMatrix;
use paradiag::{ComplexBlocks, ParadiagError, RealBlocks, SpaceOperator};
use proptest::prelude::*;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn gamma_matrix(nt: usize, alpha: f64) -> DMatrix<Complex64> {
    DMatrix::from_diagonal(&DVector::from_fn(nt, |n, _| c(alpha.powf(n as f64 / nt as f64))))
}

#[test]
fn spectrum_of_one_by_one() {
    let pair = AlphaCirculantPair::new(vec![3.5], vec![-2.0], 0.3).unwrap();
    let s = alpha_circulant_spectrum(&pair).unwrap();
    assert!((s.d1[0] - c(3.5)).norm() < 1e-15);
    assert!((s.d2[0] - c(-2.0)).norm() < 1e-15);
}

#[test]
fn spectrum_of_two_by_two_example() {
    let pair = AlphaCirculantPair::new(vec![2.0, 1.0], vec![1.0, 0.0], 0.25).unwrap();
    let s = alpha_circulant_spectrum(&pair).unwrap();
    assert!((s.d1[0] - c(2.5)).norm() < 1e-14);
    assert!((s.d1[1] - c(1.5)).norm() < 1e-14);
}

#[test]
fn identity_circulant_has_unit_spectrum() {
    let mut col = vec![0.0; 7];
    col[0] = 1.0;
    let pair = AlphaCirculantPair::new(col.clone(), col, 1.0).unwrap();
    let s = alpha_circulant_spectrum(&pair).unwrap();
    assert!(s.d1.iter().all(|d| (d - c(1.0)).norm() < 1e-14));
}

#[test]
fn alpha_outside_unit_interval_rejected() {
    for alpha in [0.0, -0.5, 1.5, f64::NAN] {
        let err = AlphaCirculantPair::new(vec![1.0, 2.0], vec![0.0, 1.0], alpha).unwrap_err();
        assert!(matches!(err, ParadiagError::InvalidParameter(_)));
    }
}

#[test]
fn spectrum_matches_dense_eigenvalues() {
    let mut r = rng(11);
    for nt in [1usize, 2, 5, 8, 16] {
        for alpha in [0.05, 0.5, 1.0] {
            let col = random_vec(&mut r, nt);
            let pair = AlphaCirculantPair::new(col.clone(), col.clone(), alpha).unwrap();
            let (c1, _) = pair.time_matrices();
            let eig = paradiag::linalg::dense_eigenvalues(&c1.to_dense()).unwrap();
            let s = alpha_circulant_spectrum(&pair).unwrap();
            assert!(multiset_distance(&s.d1, &eig) < 1e-12, "nt={nt} alpha={alpha}");
        }
    }
}

#[test]
fn forward_transform_single_step_is_identity() {
    let mut r = rng(1);
    let v = random_blocks(&mut r, 1, 6);
    let out = weighted_forward_transform(&v, 0.4).unwrap();
    for (a, b) in out.as_slice().iter().zip(v.as_slice()) {
        assert!((a - c(*b)).norm() < 1e-15);
    }
}

#[test]
fn forward_transform_of_constant_concentrates_in_first_block() {
    let w = [1.0, -2.0, 0.5];
    let v = RealBlocks::from_blocks(&vec![w.to_vec(); 8]).unwrap();
    let out = weighted_forward_transform(&v, 1.0).unwrap();
    let root = 8f64.sqrt();
    for (n, block) in out.blocks().enumerate() {
        for (j, z) in block.iter().enumerate() {
            let expect = if n == 0 { root * w[j] } else { 0.0 };
            assert!((z - c(expect)).norm() < 1e-13);
        }
    }
}

fn dense_forward(nt: usize, nx: usize, alpha: f64) -> DMatrix<Complex64> {
    let id = DMatrix::<Complex64>::identity(nx, nx);
    complex_kron(&(dft_matrix(nt) * gamma_matrix(nt, alpha)), &id)
}

#[test]
fn forward_and_inverse_match_dense_kronecker() {
    let mut r = rng(2);
    let (nt, nx, alpha) = (4, 3, 0.5);
    let v = random_blocks(&mut r, nt, nx);
    let dense = dense_forward(nt, nx, alpha);
    let x = DVector::from_iterator(nt * nx, v.as_slice().iter().map(|&x| c(x)));
    let expect = &dense * &x;
    let got = weighted_forward_transform(&v, alpha).unwrap();
    assert!(max_abs_c(got.as_slice(), expect.as_slice()) < 1e-13);

    let y = ComplexBlocks::from_vec(nt, nx, expect.as_slice().to_vec()).unwrap();
    let inv = dense.clone().try_inverse().unwrap();
    let back = &inv * &expect;
    let got_back = weighted_inverse_transform(&y, alpha).unwrap();
    assert!(max_abs_c(got_back.as_slice(), back.as_slice()) < 1e-13);
}

#[test]
fn inverse_transform_single_step_is_identity() {
    let v = ComplexBlocks::from_vec(1, 2, vec![Complex64::new(1.0, 2.0), Complex64::new(-3.0, 0.5)]).unwrap();
    let out = weighted_inverse_transform(&v, 0.1).unwrap();
    assert!(max_abs_c(out.as_slice(), v.as_slice()) < 1e-15);
}

#[test]
fn shifted_solve_with_identity_mass_and_constant_shift() {
    let spectrum = CirculantSpectrum { d1: vec![c(2.0); 3], d2: vec![c(0.0); 3] };
    let mut r = rng(3);
    let s1 = random_blocks(&mut r, 3, 4).to_complex();
    let out = shifted_block_solve(&spectrum, &SpaceOperator::identity(4), &SpaceOperator::zero(4), &s1, None).unwrap();
    for (a, b) in out.as_slice().iter().zip(s1.as_slice()) {
        assert!((a - b / 2.0).norm() < 1e-15);
    }
}

#[test]
fn shifted_solve_scalar_space() {
    let pair = AlphaCirculantPair::new(vec![2.0, 1.0], vec![1.0, 0.0], 0.25).unwrap();
    let spectrum = alpha_circulant_spectrum(&pair).unwrap();
    let s1 = ComplexBlocks::from_vec(2, 1, vec![c(5.0), c(3.0)]).unwrap();
    let id = SpaceOperator::identity(1);
    let out = shifted_block_solve(&spectrum, &id, &SpaceOperator::zero(1), &s1, None).unwrap();
    assert!((out.as_slice()[0] - c(2.0)).norm() < 1e-14);
    assert!((out.as_slice()[1] - c(2.0)).norm() < 1e-14);
}

fn laplacian_1d(nx: usize) -> SpaceOperator {
    paradiag::problems::laplacian_1d_dirichlet(nx).unwrap()
}

#[test]
fn shifted_solve_matches_dense_block_diagonal() {
    let (nt, nx) = (4, 8);
    let pair = AlphaCirculantPair::new(vec![1.0, -1.0, 0.0, 0.0], vec![0.5, 0.5, 0.0, 0.0], 0.3).unwrap();
    let spectrum = alpha_circulant_spectrum(&pair).unwrap();
    let k = laplacian_1d(nx);
    let m = SpaceOperator::identity(nx);
    let mut r = rng(4);
    let s1 = ComplexBlocks::from_vec(
        nt,
        nx,
        random_vec(&mut r, 2 * nt * nx).chunks(2).map(|p| Complex64::new(p[0], p[1])).collect(),
    )
    .unwrap();
    let cache = ShiftFactorCache::build(&spectrum.shifts(), &m, &k, false).unwrap();
    let out = shifted_block_solve(&spectrum, &m, &k, &s1, Some(&cache)).unwrap();
    let kd = to_complex_matrix(&k.to_dense());
    for n in 0..nt {
        let a = DMatrix::<Complex64>::identity(nx, nx) * spectrum.d1[n] + &kd * spectrum.d2[n];
        let x = a.lu().solve(&DVector::from_column_slice(s1.block(n))).unwrap();
        assert!(max_abs_c(out.block(n), x.as_slice()) < 1e-12);
    }
}

#[test]
fn singular_shift_is_reported_with_index() {
    let spectrum = CirculantSpectrum { d1: vec![c(1.0), c(0.0), c(2.0)], d2: vec![c(0.0); 3] };
    let s1 = ComplexBlocks::zeros(3, 2);
    let err = shifted_block_solve(&spectrum, &SpaceOperator::identity(2), &SpaceOperator::zero(2), &s1, None).unwrap_err();
    assert_eq!(err, ParadiagError::SingularShift { index: 1 });
}

#[test]
fn mismatched_cache_is_rejected() {
    let spectrum = CirculantSpectrum { d1: vec![c(1.0), c(3.0)], d2: vec![c(0.0); 2] };
    let other = CirculantSpectrum { d1: vec![c(2.0), c(3.0)], d2: vec![c(0.0); 2] };
    let id = SpaceOperator::identity(2);
    let cache = ShiftFactorCache::build(&other.shifts(), &id, &SpaceOperator::zero(2), false).unwrap();
    let s1 = ComplexBlocks::zeros(2, 2);
    assert!(shifted_block_solve(&spectrum, &id, &SpaceOperator::zero(2), &s1, Some(&cache)).is_err());
}

fn dense_preconditioner(pair: &AlphaCirculantPair, m: &SpaceOperator, k: &SpaceOperator) -> DMatrix<f64> {
    let (c1, c2) = pair.time_matrices();
    c1.to_dense().kronecker(&m.to_dense()) + c2.to_dense().kronecker(&k.to_dense())
}

#[test]
fn inverse_then_apply_is_identity() {
    let mut r = rng(5);
    let a = ade_1d_periodic(1e-2, 16).unwrap();
    let dt = 1.0 / 8.0;
    let pair = AlphaCirculantPair::new(
        [vec![1.0 / dt, -1.0 / dt], vec![0.0; 6]].concat(),
        [vec![0.5, 0.5], vec![0.0; 6]].concat(),
        0.1,
    )
    .unwrap();
    let id = SpaceOperator::identity(16);
    let rhs = random_blocks(&mut r, 8, 16);
    let x = apply_alpha_circulant_inverse(&pair, &id, &a, &rhs, None).unwrap();
    let back = all_at_once_matvec(&pair.time_matrices().0, &pair.time_matrices().1, &id, &a, &x).unwrap();
    assert!(rel_diff(back.as_slice(), rhs.as_slice()) < 1e-11);

    let dense = dense_preconditioner(&pair, &id, &a);
    let expect = paradiag::linalg::dense_solve(&dense, rhs.as_slice()).unwrap();
    assert!(rel_diff(x.as_slice(), &expect) < 1e-10);
}

#[test]
fn single_step_inverse_is_plain_solve() {
    let k = laplacian_1d(5);
    let m = SpaceOperator::identity(5);
    let pair = AlphaCirculantPair::new(vec![3.0], vec![0.5], 0.7).unwrap();
    let mut r = rng(6);
    let rhs = random_blocks(&mut r, 1, 5);
    let x = apply_alpha_circulant_inverse(&pair, &m, &k, &rhs, None).unwrap();
    let dense = m.to_dense() * 3.0 + k.to_dense() * 0.5;
    let expect = paradiag::linalg::dense_solve(&dense, rhs.as_slice()).unwrap();
    assert!(rel_diff(x.as_slice(), &expect) < 1e-13);
}

#[test]
fn solver_with_conjugate_symmetry_matches_full_solve() {
    let mut r = rng(7);
    let a = ade_1d_periodic(1e-1, 12).unwrap();
    let id = SpaceOperator::identity(12);
    for nt in [5usize, 8] {
        let mut c1 = vec![0.0; nt];
        let mut c2 = vec![0.0; nt];
        c1[0] = 4.0;
        c1[1] = -4.0;
        c2[0] = 1.0;
        let pair = AlphaCirculantPair::new(c1, c2, 0.2).unwrap();
        let full = AlphaCirculantSolver::new(pair.clone(), &id, &a, SolverOptions::default()).unwrap();
        let half = AlphaCirculantSolver::new(pair, &id, &a, SolverOptions { conjugate_symmetry: true }).unwrap();
        assert!(half.cache().factorization_count() <= nt / 2 + 1);
        let rhs = random_blocks(&mut r, nt, 12);
        let x1 = full.apply_inverse(&rhs).unwrap();
        let x2 = half.apply_inverse(&rhs).unwrap();
        assert!(rel_diff(x2.as_slice(), x1.as_slice()) < 1e-12);
    }
}

#[test]
fn matvec_of_zero_is_zero() {
    let b1 = TimeMatrix::lower_toeplitz(4, &[1.0, -1.0]);
    let b2 = TimeMatrix::lower_toeplitz(4, &[0.5, 0.5]);
    let out = all_at_once_matvec(&b1, &b2, &SpaceOperator::identity(3), &laplacian_1d(3), &RealBlocks::zeros(4, 3)).unwrap();
    assert!(out.as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn matvec_single_step() {
    let k = laplacian_1d(4);
    let m = SpaceOperator::identity(4);
    let u = RealBlocks::from_vec(1, 4, vec![1.0, 2.0, -1.0, 0.5]).unwrap();
    let b1 = TimeMatrix::lower_toeplitz(1, &[2.0]);
    let b2 = TimeMatrix::lower_toeplitz(1, &[0.25]);
    let out = all_at_once_matvec(&b1, &b2, &m, &k, &u).unwrap();
    let expect = (m.to_dense() * 2.0 + k.to_dense() * 0.25) * DVector::from_column_slice(u.as_slice());
    assert!(rel_diff(out.as_slice(), expect.as_slice()) < 1e-15);
}

#[test]
fn matvec_matches_dense_kronecker_with_corners() {
    let mut r = rng(8);
    let (nt, nx) = (5, 8);
    let mut b1 = TimeMatrix::zeros(nt, 2, 0);
    let mut b2 = TimeMatrix::zeros(nt, 2, 0);
    for i in 0..nt {
        for j in i.saturating_sub(2)..=i {
            b1.set(i, j, r.random_range(-1.0..1.0));
            b2.set(i, j, r.random_range(-1.0..1.0));
        }
    }
    b1.set(0, nt - 1, 0.3);
    b2.set(1, nt - 1, -0.7);
    let m = ade_1d_periodic(0.5, nx).unwrap();
    let k = laplacian_1d(nx);
    let u = random_blocks(&mut r, nt, nx);
    let out = all_at_once_matvec(&b1, &b2, &m, &k, &u).unwrap();
    let dense = b1.to_dense().kronecker(&m.to_dense()) + b2.to_dense().kronecker(&k.to_dense());
    let expect = dense * DVector::from_column_slice(u.as_slice());
    assert!(rel_diff(out.as_slice(), expect.as_slice()) < 1e-14);
}

#[test]
fn gamma_weights_stay_below_inverse_alpha() {
    for (nt, alpha) in [(8usize, 0.1f64), (64, 1e-2), (128, 1e-4)] {
        let worst = alpha.powf(-((nt - 1) as f64) / nt as f64);
        assert!(worst < 1.0 / alpha);
    }
}

use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transform_round_trip(nt in 1usize..24, nx in 1usize..6, alpha in 0.01f64..=1.0, seed in any::<u64>()) {
        let mut r = rng(seed);
        let v = random_blocks(&mut r, nt, nx);
        let f = weighted_forward_transform(&v, alpha).unwrap();
        let back = weighted_inverse_transform(&f, alpha).unwrap().into_real_checked(1e-10).unwrap();
        prop_assert!(rel_diff(back.as_slice(), v.as_slice()) < 1e-12);
    }

    #[test]
    fn preconditioner_consistency(nt in 1usize..64, nx in 3usize..40, alpha in 0.01f64..=1.0, seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = ade_1d_periodic(0.1, nx).unwrap();
        let id = SpaceOperator::identity(nx);
        let mut c1 = vec![0.0; nt];
        let mut c2 = vec![0.0; nt];
        c1[0] = 1.0 / 0.05;
        c2[0] = 0.5;
        if nt > 1 {
            c1[1] = -1.0 / 0.05;
            c2[1] = 0.5;
        }
        let pair = AlphaCirculantPair::new(c1, c2, alpha).unwrap();
        let rhs = random_blocks(&mut r, nt, nx);
        let solver = AlphaCirculantSolver::new(pair, &id, &a, SolverOptions::default()).unwrap();
        let x = solver.apply_inverse(&rhs).unwrap();
        let back = solver.apply(&x).unwrap();
        prop_assert!(rel_diff(back.as_slice(), rhs.as_slice()) < 1e-10);
    }

    #[test]
    fn spectrum_matches_dense_multiset(nt in 1usize..=16, alpha in 0.05f64..=1.0, seed in any::<u64>()) {
        let mut r = rng(seed);
        let col = random_vec(&mut r, nt);
        let pair = AlphaCirculantPair::new(col.clone(), col, alpha).unwrap();
        let eig = paradiag::linalg::dense_eigenvalues(&pair.time_matrices().0.to_dense()).unwrap();
        let s = alpha_circulant_spectrum(&pair).unwrap();
        prop_assert!(multiset_distance(&s.d1, &eig) < 1e-12);
    }
}
