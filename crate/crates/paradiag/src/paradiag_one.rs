//! Direct diagonalization solvers: geometric step sizes with closed-form
//! Toeplitz eigenvectors, and the midpoint/backward-Euler hybrid scheme with
//! Chebyshev eigenvectors.

use std::time::Instant;

use krylov::SolveReport;
use nalgebra::{DMatrix, Dyn, LU};
use num_complex::Complex64;

use crate::block::{ComplexBlocks, RealBlocks};
use crate::error::{check_dim, ParadiagError, Result};
use crate::linalg::{cond2, cond2_complex};
use crate::shift::ShiftFactorCache;
use crate::spectral::IMAG_TOL;
use crate::time_disc::{AllAtOnceSystem, Scheme, TimeGrid};
use crate::time_matrix::TimeMatrix;

/// Where the entries of `V⁻¹` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InverseSource {
    /// Closed form, confirmed against the triangular inversion of `V`.
    ClosedForm,
    /// Triangular Toeplitz inversion of `V` (the closed form disagreed).
    Numerical,
}

/// `B = B₂⁻¹B₁ = V·diag(1/(θΔtₙ))·V⁻¹` for geometric steps, with `V` and
/// `V⁻¹` unit lower-triangular Toeplitz matrices generated by `p` and `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormEigen {
    pub theta: f64,
    pub tau: f64,
    pub nt: usize,
    /// `p₁ … p_{nt−1}`.
    pub p: Vec<f64>,
    /// `q₁ … q_{nt−1}`.
    pub q: Vec<f64>,
    pub q_source: InverseSource,
    /// Column scaling making every column of `V·D̃` a unit vector.
    pub scaling: Vec<f64>,
    pub eigvals: Vec<f64>,
}

fn with_one(v: &[f64]) -> Vec<f64> {
    std::iter::once(1.0).chain(v.iter().copied()).collect()
}

/// Inverse of the unit lower-triangular Toeplitz matrix generated by `p`.
fn toeplitz_inverse(p: &[f64]) -> Vec<f64> {
    let pp = with_one(p);
    let mut q = vec![1.0];
    for n in 1..pp.len() {
        let s: f64 = (1..=n).map(|j| pp[j] * q[n - j]).sum();
        q.push(-s);
    }
    q.split_off(1)
}

impl ClosedFormEigen {
    pub fn v_dense(&self) -> DMatrix<f64> {
        lower_toeplitz_dense(&with_one(&self.p))
    }

    pub fn v_inverse_dense(&self) -> DMatrix<f64> {
        lower_toeplitz_dense(&with_one(&self.q))
    }

    /// `V·D̃`.
    pub fn scaled_v_dense(&self) -> DMatrix<f64> {
        let mut v = self.v_dense();
        for (j, s) in self.scaling.iter().enumerate() {
            v.column_mut(j).scale_mut(*s);
        }
        v
    }

    pub fn cond_v(&self) -> f64 {
        cond2(&self.v_dense())
    }

    pub fn cond_scaled_v(&self) -> f64 {
        cond2(&self.scaled_v_dense())
    }
}

fn lower_toeplitz_dense(col: &[f64]) -> DMatrix<f64> {
    let n = col.len();
    DMatrix::from_fn(n, n, |i, j| if i >= j { col[i - j] } else { 0.0 })
}

/// Closed-form eigendecomposition of the θ-method on a geometric grid.
pub fn closed_form_eigen(theta: f64, tau: f64, grid: &TimeGrid) -> Result<ClosedFormEigen> {
    if !(tau > 1.0) {
        return Err(ParadiagError::InvalidParameter(format!("tau must exceed 1, got {tau}")));
    }
    let half = theta == 0.5;
    if theta != 1.0 && !half {
        return Err(ParadiagError::InvalidParameter(format!("theta must be 1 or 1/2, got {theta}")));
    }
    let nt = grid.nt();
    let steps = grid.steps();
    for n in 1..nt {
        let ratio = steps[n] / steps[n - 1];
        if ((ratio - tau) / tau).abs() > 1e-12 {
            return Err(ParadiagError::InvalidParameter(format!("grid is not geometric with ratio {tau}")));
        }
    }
    let mut p = Vec::with_capacity(nt.saturating_sub(1));
    let mut q_closed = Vec::with_capacity(nt.saturating_sub(1));
    let mut prod_p = 1.0;
    let mut prod_q = 1.0;
    for n in 1..nt {
        let tj = tau.powi(n as i32);
        if half {
            prod_p *= (1.0 + tj) / (1.0 - tj);
            prod_q *= (1.0 + tau.powi(2 - n as i32)) / (1.0 - tau.powi(-(n as i32)));
            p.push(prod_p);
            q_closed.push(tau.powi(-(n as i32)) * prod_q);
        } else {
            prod_p /= 1.0 - tj;
            p.push(prod_p);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            q_closed.push(sign * tau.powf((n * (n - 1)) as f64 / 2.0) * prod_p);
        }
    }
    let q_num = toeplitz_inverse(&p);
    let pp = with_one(&p);
    let qq = with_one(&q_num);
    let agrees = (1..nt).all(|n| {
        let scale: f64 = (1..=n).map(|j| (pp[j] * qq[n - j]).abs()).sum::<f64>().max(q_closed[n - 1].abs());
        (q_closed[n - 1] - q_num[n - 1]).abs() <= 1e-10 * scale
    });
    let (q, q_source) = if agrees { (q_closed, InverseSource::ClosedForm) } else { (q_num, InverseSource::Numerical) };
    let scaling = (0..nt)
        .map(|n| {
            let s: f64 = p.iter().take(nt - 1 - n).map(|v| v * v).sum();
            1.0 / (1.0 + s).sqrt()
        })
        .collect();
    let eigvals = steps.iter().map(|dt| 1.0 / (theta * dt)).collect();
    Ok(ClosedFormEigen { theta, tau, nt, p, q, q_source, scaling, eigvals })
}

/// Forward substitution `(T⊗I)x = b` for lower-triangular `T`.
fn lower_solve_blocks(t: &TimeMatrix, b: &RealBlocks) -> Result<RealBlocks> {
    if t.upper_bandwidth() > 0 || t.has_corners() {
        return Err(ParadiagError::InvalidParameter("expected a lower-triangular time matrix".into()));
    }
    let (nt, nx) = (b.nt(), b.nx());
    let mut x = RealBlocks::zeros(nt, nx);
    for n in 0..nt {
        let mut acc = b.block(n).to_vec();
        let mut diag = 0.0;
        for (m, v) in t.row(n) {
            if m == n {
                diag = v;
            } else {
                let prev = x.block(m).to_vec();
                acc.iter_mut().zip(&prev).for_each(|(a, p)| *a -= v * p);
            }
        }
        if diag == 0.0 {
            return Err(ParadiagError::SingularShift { index: n });
        }
        x.block_mut(n).iter_mut().zip(&acc).for_each(|(xi, a)| *xi = a / diag);
    }
    Ok(x)
}

/// `(L⊗I)x` for the unit lower-triangular Toeplitz `L` generated by `col`.
fn toeplitz_blocks(col: &[f64], x: &ComplexBlocks) -> ComplexBlocks {
    let (nt, nx) = (x.nt(), x.nx());
    let mut out = ComplexBlocks::zeros(nt, nx);
    for n in 0..nt {
        let o = out.block_mut(n);
        for k in 0..=n {
            let c = col[k];
            for (oi, xi) in o.iter_mut().zip(x.block(n - k)) {
                *oi += xi * c;
            }
        }
    }
    out
}

/// Direct solve of a θ-method system on a geometric grid:
/// `b̃ = (B₂⁻¹⊗I)b`, `S₁ = (D̃⁻¹V⁻¹⊗I)b̃`, shifted solves, `u = (VD̃⊗I)S₂`.
pub fn direct_solve_geometric(system: &AllAtOnceSystem, eigen: &ClosedFormEigen) -> Result<(RealBlocks, SolveReport)> {
    let start = Instant::now();
    match system.scheme {
        Scheme::Theta(theta) if theta == eigen.theta => {}
        _ => return Err(ParadiagError::InvalidParameter("system and eigendecomposition use different schemes".into())),
    }
    check_dim("geometric direct solve", eigen.nt, system.nt())?;
    for (dt, lam) in system.grid.steps().iter().zip(&eigen.eigvals) {
        if ((1.0 / (eigen.theta * dt) - lam) / lam).abs() > 1e-12 {
            return Err(ParadiagError::InvalidParameter("system grid differs from the eigendecomposition grid".into()));
        }
    }
    let b_tilde = lower_solve_blocks(&system.b2, &system.rhs)?;
    let mut s = toeplitz_blocks(&with_one(&eigen.q), &b_tilde.to_complex());
    for (n, d) in eigen.scaling.iter().enumerate() {
        s.block_mut(n).iter_mut().for_each(|z| *z /= *d);
    }
    let shifts: Vec<_> = eigen.eigvals.iter().map(|&l| (Complex64::new(l, 0.0), Complex64::new(1.0, 0.0))).collect();
    let cache = ShiftFactorCache::build(&shifts, &system.mass, &system.stiffness, false)?;
    cache.solve_blocks(&mut s)?;
    for (n, d) in eigen.scaling.iter().enumerate() {
        s.block_mut(n).iter_mut().for_each(|z| *z *= *d);
    }
    let u = toeplitz_blocks(&with_one(&eigen.p), &s).into_real_checked(IMAG_TOL)?;
    let report = direct_report(start, eigen.cond_scaled_v());
    Ok((u, report))
}

fn direct_report(start: Instant, cond: f64) -> SolveReport {
    SolveReport {
        iterations: 1,
        converged: true,
        status: "direct".into(),
        cond_estimate: Some(cond),
        wall_time: start.elapsed(),
        ..SolveReport::default()
    }
}

/// Eigendecomposition `B = V·diag(λ)·V⁻¹` of the hybrid time matrix.
pub struct ChebyshevEigen {
    pub nt: usize,
    pub dt: f64,
    /// Roots of `U_{nt−1}(x) − i·T_nt(x)`.
    pub roots: Vec<Complex64>,
    /// `λₙ = i·xₙ/Δt`.
    pub eigvals: Vec<Complex64>,
    /// `V[l][n] = iˡ·U_l(xₙ)`.
    pub v: DMatrix<Complex64>,
    pub v_factorization: LU<Complex64, Dyn, Dyn>,
    /// `Cond₂(V)`.
    pub cond: f64,
}

impl ChebyshevEigen {
    /// `‖BV − VΛ‖_F / ‖B‖_F` against the assembled hybrid time matrix.
    pub fn diagonalization_residual(&self) -> Result<f64> {
        let b = crate::time_disc::hybrid_matrix(self.nt, self.dt)?.to_dense().map(|x| Complex64::new(x, 0.0));
        let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.eigvals));
        Ok((&b * &self.v - &self.v * lambda).norm() / b.norm())
    }
}

impl std::fmt::Debug for ChebyshevEigen {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChebyshevEigen").field("nt", &self.nt).field("dt", &self.dt).field("cond", &self.cond).finish()
    }
}

/// `(g, g')` for `g(x) = U_{N−1}(x) − i·T_N(x)`, with `T_N = cos Nθ`,
/// `U_{N−1} = sin Nθ / sin θ`, `x = cos θ`.
fn characteristic(n: usize, x: Complex64) -> (Complex64, Complex64) {
    let nf = n as f64;
    let th = x.acos();
    let t = (th * nf).cos();
    let u = (th * nf).sin() / th.sin();
    let dt = u * nf;
    let du = (t * nf - x * u) / (x * x - 1.0);
    let i = Complex64::i();
    (u - i * t, du - i * dt)
}

const MAX_ROOT_ITERS: usize = 100;
const DUPLICATE_DIST: f64 = 1e-10;

/// Simultaneous Newton iteration with implicit deflation (Aberth), started
/// from slightly lifted Chebyshev nodes, followed by a few plain Newton
/// polishing steps.
fn chebyshev_roots(n: usize, tol: f64) -> Result<Vec<Complex64>> {
    let nf = n as f64;
    let mut x: Vec<Complex64> = (1..=n)
        .map(|k| {
            let a = (2 * k - 1) as f64 * std::f64::consts::PI / (2.0 * nf);
            Complex64::new(a.cos(), 1e-3 * a.sin())
        })
        .collect();
    let mut converged = false;
    for _ in 0..MAX_ROOT_ITERS {
        let mut max_corr: f64 = 0.0;
        let next: Vec<Complex64> = (0..n)
            .map(|k| {
                let (g, dg) = characteristic(n, x[k]);
                let w = g / dg;
                let s: Complex64 = (0..n).filter(|&j| j != k).map(|j| 1.0 / (x[k] - x[j])).sum();
                let corr = w / (1.0 - w * s);
                max_corr = max_corr.max(corr.norm());
                x[k] - corr
            })
            .collect();
        x = next;
        if !x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            break;
        }
        if max_corr < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(ParadiagError::RootFinding(format!("no convergence after {MAX_ROOT_ITERS} iterations (nt = {n})")));
    }
    for _ in 0..3 {
        for z in x.iter_mut() {
            let (g, dg) = characteristic(n, *z);
            *z -= g / dg;
        }
    }
    for i in 0..n {
        for j in 0..i {
            if (x[i] - x[j]).norm() < DUPLICATE_DIST {
                return Err(ParadiagError::RootFinding(format!("duplicate roots at indices {j} and {i}")));
            }
        }
    }
    Ok(x)
}

/// Closed-form eigendecomposition of the hybrid time matrix.
pub fn chebyshev_eigen(nt: usize, dt: f64, newton_tol: f64) -> Result<ChebyshevEigen> {
    if nt < 2 {
        return Err(ParadiagError::InvalidParameter(format!("hybrid scheme needs nt >= 2, got {nt}")));
    }
    let roots = chebyshev_roots(nt, newton_tol)?;
    let i = Complex64::i();
    let eigvals = roots.iter().map(|x| i * x / dt).collect();
    let mut v = DMatrix::zeros(nt, nt);
    for (n, &x) in roots.iter().enumerate() {
        let mut prev = Complex64::new(1.0, 0.0);
        let mut cur = x * 2.0;
        let mut ipow = Complex64::new(1.0, 0.0);
        v[(0, n)] = prev;
        for l in 1..nt {
            ipow *= i;
            v[(l, n)] = ipow * cur;
            let next = x * 2.0 * cur - prev;
            prev = cur;
            cur = next;
        }
    }
    let cond = cond2_complex(&v);
    let v_factorization = v.clone().lu();
    Ok(ChebyshevEigen { nt, dt, roots, eigvals, v, v_factorization, cond })
}

fn blocks_as_matrix(b: &ComplexBlocks) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(b.nt(), b.nx(), b.as_slice())
}

fn matrix_as_blocks(m: &DMatrix<Complex64>) -> Result<ComplexBlocks> {
    let (nt, nx) = m.shape();
    let data = (0..nt).flat_map(|i| (0..nx).map(move |j| m[(i, j)])).collect();
    ComplexBlocks::from_vec(nt, nx, data)
}

fn hybrid_solve(
    system: &AllAtOnceSystem,
    eigen: &ChebyshevEigen,
    shifts: Vec<(Complex64, Complex64)>,
) -> Result<(RealBlocks, SolveReport)> {
    let start = Instant::now();
    check_dim("hybrid direct solve", eigen.nt, system.nt())?;
    let rhs = blocks_as_matrix(&system.rhs.to_complex());
    let s1 = eigen
        .v_factorization
        .solve(&rhs)
        .ok_or_else(|| ParadiagError::InvalidParameter("eigenvector matrix is singular".into()))?;
    let mut s = matrix_as_blocks(&s1)?;
    let cache = ShiftFactorCache::build(&shifts, &system.mass, &system.stiffness, false)?;
    cache.solve_blocks(&mut s)?;
    let u = matrix_as_blocks(&(&eigen.v * blocks_as_matrix(&s)))?.into_real_checked(IMAG_TOL)?;
    Ok((u, direct_report(start, eigen.cond)))
}

fn check_hybrid_dt(system: &AllAtOnceSystem, eigen: &ChebyshevEigen) -> Result<()> {
    let dt = system.grid.steps()[0];
    if !system.grid.is_uniform() || ((dt - eigen.dt) / eigen.dt).abs() > 1e-14 {
        return Err(ParadiagError::InvalidParameter("system step differs from the eigendecomposition step".into()));
    }
    Ok(())
}

/// `(B⊗M + I⊗K)u = b` with `S₁ = (V⁻¹⊗I)b`, shifts `(λₙ, 1)`, `u = (V⊗I)S₂`.
pub fn direct_solve_hybrid(system: &AllAtOnceSystem, eigen: &ChebyshevEigen) -> Result<(RealBlocks, SolveReport)> {
    if system.scheme != Scheme::Hybrid {
        return Err(ParadiagError::InvalidParameter("expected a hybrid system".into()));
    }
    check_hybrid_dt(system, eigen)?;
    let one = Complex64::new(1.0, 0.0);
    hybrid_solve(system, eigen, eigen.eigvals.iter().map(|&l| (l, one)).collect())
}

/// Second-order variant: `B₂ₙd = B²` shares `V`, with shifts `λₙ²`.
pub fn direct_solve_wave_hybrid(system: &AllAtOnceSystem, eigen: &ChebyshevEigen) -> Result<(RealBlocks, SolveReport)> {
    if system.scheme != Scheme::HybridSecondOrder {
        return Err(ParadiagError::InvalidParameter("expected a second-order hybrid system".into()));
    }
    check_hybrid_dt(system, eigen)?;
    let one = Complex64::new(1.0, 0.0);
    hybrid_solve(system, eigen, eigen.eigvals.iter().map(|&l| (l * l, one)).collect())
}

/// Solution samples at increasing times, starting with the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Runs `inner(u_start, t_start, grid)` on consecutive windows, feeding each
/// window's final state into the next. `inner` returns the states at the
/// grid's time points after `t_start`.
pub fn windowed_solve<F>(u0: &[f64], windows: &[TimeGrid], mut inner: F) -> Result<Trajectory>
where
    F: FnMut(&[f64], f64, &TimeGrid) -> Result<RealBlocks>,
{
    let mut traj = Trajectory { times: vec![0.0], states: vec![u0.to_vec()] };
    let mut t0 = 0.0;
    for grid in windows {
        let start = traj.last().to_vec();
        let sol = inner(&start, t0, grid)?;
        check_dim("window solution", grid.nt(), sol.nt())?;
        for (n, t) in grid.times().iter().skip(1).enumerate() {
            traj.times.push(t0 + t);
            traj.states.push(sol.block(n).to_vec());
        }
        t0 += grid.total();
    }
    Ok(traj)
}
