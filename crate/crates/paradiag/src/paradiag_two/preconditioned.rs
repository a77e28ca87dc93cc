//! GMRES with α-circulant preconditioners: the implicit leap-frog wave
//! system and the wave control saddle-point system.

use std::time::Instant;

use krylov::{gmres, KrylovConfig, SolveReport};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::block::{ComplexBlocks, RealBlocks};
use crate::error::{check_dim, ParadiagError, Result};
use crate::fft::TimeFft;
use crate::linalg::kron;
use crate::shift::ShiftFactorCache;
use crate::space::SpaceOperator;
use crate::spectral::{AlphaCirculantPair, AlphaCirculantSolver, SolverOptions, IMAG_TOL};
use crate::time_disc::{AllAtOnceSystem, SaddleSystem, Scheme};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Left-preconditioned GMRES on a leap-frog system with `P_α` built from
/// α-circulant versions of both time stencils. Starts from zero.
pub fn wave_gmres_solve(
    system: &AllAtOnceSystem,
    alpha: f64,
    cfg: &KrylovConfig,
    options: SolverOptions,
) -> Result<(RealBlocks, SolveReport)> {
    if system.scheme != Scheme::Leapfrog {
        return Err(ParadiagError::InvalidParameter("expected a leap-frog system".into()));
    }
    let start = Instant::now();
    let pair = system.circulant_pair(alpha)?;
    let solver = AlphaCirculantSolver::new(pair, &system.mass, &system.stiffness, options)?;
    let (nt, nx) = (system.nt(), system.nx());
    let wrap = |v: &[f64]| RealBlocks::from_vec(nt, nx, v.to_vec());
    let x0 = vec![0.0; nt * nx];
    let (x, mut report) = gmres(
        |v: &[f64]| Ok::<_, ParadiagError>(system.matvec(&wrap(v)?)?.into_vec()),
        |v: &[f64]| Ok::<_, ParadiagError>(solver.apply_inverse(&wrap(v)?)?.into_vec()),
        system.rhs.as_slice(),
        &x0,
        cfg,
    )?;
    report.wall_time = start.elapsed();
    Ok((wrap(&x)?, report))
}

/// Strang preconditioner of the scaled control system,
///
/// ```text
/// P = [ C₁⊗I + C₂⊗hA    −cI            ]
///     [ cI              C₁ᵀ⊗I + C₂ᵀ⊗hA ],
/// ```
///
/// with `C₁ = circ(1, −2, 1)`, `C₂ = circ(1, 0, 1)`, `h = Δt²/2` and
/// `c = Δt²/√γ`. In the Fourier basis each frequency `k` carries the block
/// `[[d₁ + d₂hA, −c], [c, d̄₁ + d̄₂hA]]`; with `a = d₁/d₂` real it factors as
/// `diag(d₂, d̄₂)·Vₖ·diag(Σ₁, Σ₂)·Vₖ⁻¹`, `Σ₁,₂ = aI + hA ± i·c/|d₂|`.
/// Frequencies with `d₂ = 0` (present when 4 divides `nt`) reduce to a scalar
/// 2×2 solve.
#[derive(Debug)]
pub struct OptCtrlPreconditioner {
    nt: usize,
    nx: usize,
    h: f64,
    coupling: f64,
    d1: Vec<Complex64>,
    d2: Vec<Complex64>,
    phase: Vec<Complex64>,
    /// Frequencies that go through shifted solves, in cache order.
    regular: Vec<usize>,
    fft: TimeFft,
    cache: ShiftFactorCache,
}

/// `|d₂|` below this (relative to its maximum 2) counts as zero.
const SINGULAR_SYMBOL: f64 = 1e-12;

fn strang_symbols(nt: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let fft = TimeFft::new(nt);
    let symbol = |stencil: [f64; 3]| {
        let mut v = vec![Complex64::new(0.0, 0.0); nt];
        for (k, s) in stencil.iter().enumerate() {
            v[k % nt] += s;
        }
        fft.unnormalized_f(&mut v);
        v
    };
    (symbol([1.0, -2.0, 1.0]), symbol([1.0, 0.0, 1.0]))
}

/// `s_k = d̄₂/|d₂|`, or 1 where `d₂` vanishes.
fn phases(d2: &[Complex64]) -> Vec<Complex64> {
    d2.iter()
        .map(|d| if d.norm() <= SINGULAR_SYMBOL * 2.0 { Complex64::new(1.0, 0.0) } else { d.conj() / d.norm() })
        .collect()
}

impl OptCtrlPreconditioner {
    pub fn new(system: &SaddleSystem, alpha: f64) -> Result<Self> {
        if alpha != 1.0 {
            return Err(ParadiagError::InvalidParameter(format!(
                "the control preconditioner is only available for the Strang case alpha = 1, got {alpha}"
            )));
        }
        if !system.scaled {
            return Err(ParadiagError::InvalidParameter("expected the sqrt(gamma)-scaled control system".into()));
        }
        let (nt, nx) = (system.nt, system.nx());
        let h = 0.5 * system.dt * system.dt;
        let (coupling, _) = system.couplings();
        let (d1, d2) = strang_symbols(nt);
        let phase = phases(&d2);
        let regular: Vec<usize> = (0..nt).filter(|&k| d2[k].norm() > SINGULAR_SYMBOL * 2.0).collect();
        let mut upper = Vec::with_capacity(regular.len());
        for &k in &regular {
            let ratio = d1[k] / d2[k];
            if ratio.im.abs() > IMAG_TOL * ratio.norm().max(1.0) {
                return Err(ParadiagError::ImaginaryResidue { ratio: ratio.im.abs() / ratio.norm() });
            }
            upper.push(Complex64::new(ratio.re, coupling / d2[k].norm()));
        }
        let hc = Complex64::new(h, 0.0);
        let shifts: Vec<(Complex64, Complex64)> =
            upper.iter().map(|&s| (s, hc)).chain(upper.iter().map(|&s| (s.conj(), hc))).collect();
        let cache = ShiftFactorCache::build(&shifts, &SpaceOperator::identity(nx), &system.a, true)?;
        Ok(Self { nt, nx, h, coupling, d1, d2, phase, regular, fft: TimeFft::new(nt), cache })
    }

    /// Number of distinct sparse factorizations held.
    pub fn factorization_count(&self) -> usize {
        self.cache.factorization_count()
    }

    /// `P⁻¹r` for `r = [state block; adjoint block]`.
    pub fn apply_inverse(&self, r: &[f64]) -> Result<Vec<f64>> {
        let (nt, nx) = (self.nt, self.nx);
        check_dim("control preconditioner", 2 * nt * nx, r.len())?;
        let lift = |v: &[f64]| {
            ComplexBlocks::from_vec(nt, nx, v.iter().map(|&x| Complex64::new(x, 0.0)).collect())
        };
        let mut q1 = lift(&r[..nt * nx])?;
        let mut q2 = lift(&r[nt * nx..])?;
        self.fft.apply_f(&mut q1);
        self.fft.apply_f(&mut q2);

        let m = self.regular.len();
        let mut z = ComplexBlocks::zeros(2 * m, nx);
        for (slot, &k) in self.regular.iter().enumerate() {
            let s_bar = self.phase[k].conj();
            let (a, b) = (q1.block(k), q2.block(k));
            for j in 0..nx {
                let t = I * s_bar * b[j];
                z.block_mut(slot)[j] = 0.5 * (a[j] + t);
                z.block_mut(m + slot)[j] = 0.5 * (a[j] - t);
            }
        }
        self.cache.solve_blocks(&mut z)?;

        for (slot, &k) in self.regular.iter().enumerate() {
            let s = self.phase[k];
            let (d2, d2c) = (self.d2[k], self.d2[k].conj());
            for j in 0..nx {
                let (z1, z2) = (z.block(slot)[j], z.block(m + slot)[j]);
                q1.block_mut(k)[j] = (z1 + z2) / d2;
                q2.block_mut(k)[j] = I * s * (z2 - z1) / d2c;
            }
        }
        let c = self.coupling;
        for k in (0..nt).filter(|k| !self.regular.contains(k)) {
            let d1 = self.d1[k];
            let det = d1.norm_sqr() + c * c;
            for j in 0..nx {
                let (a, b) = (q1.block(k)[j], q2.block(k)[j]);
                q1.block_mut(k)[j] = (d1.conj() * a + c * b) / det;
                q2.block_mut(k)[j] = (d1 * b - c * a) / det;
            }
        }

        self.fft.apply_f_adjoint(&mut q1);
        self.fft.apply_f_adjoint(&mut q2);
        let mut out = q1.into_real_checked(IMAG_TOL)?.into_vec();
        out.extend(q2.into_real_checked(IMAG_TOL)?.into_vec());
        Ok(out)
    }

    /// Dense `P`, assembled from the circulant time matrices; a test oracle.
    pub fn dense_matrix(&self, a: &SpaceOperator) -> Result<DMatrix<f64>> {
        let (nt, nx) = (self.nt, self.nx);
        let mut c1 = vec![0.0; nt];
        let mut c2 = vec![0.0; nt];
        for (k, (s1, s2)) in [(1.0, self.h), (-2.0, 0.0), (1.0, self.h)].into_iter().enumerate() {
            c1[k % nt] += s1;
            c2[k % nt] += s2;
        }
        let (t1, t2) = AlphaCirculantPair::new(c1, c2, 1.0)?.time_matrices();
        let (c1, c2) = (t1.to_dense(), t2.to_dense());
        let id = DMatrix::identity(nx, nx);
        let ad = a.to_dense();
        let n = nt * nx;
        let mut p = DMatrix::zeros(2 * n, 2 * n);
        p.view_mut((0, 0), (n, n)).copy_from(&(kron(&c1, &id) + kron(&c2, &ad)));
        p.view_mut((n, n), (n, n)).copy_from(&(kron(&c1.transpose(), &id) + kron(&c2.transpose(), &ad)));
        for i in 0..n {
            p[(i, n + i)] = -self.coupling;
            p[(n + i, i)] = self.coupling;
        }
        Ok(p)
    }
}

/// `V = diag(F*, F*)·[[I, I], [−iS, iS]]`, `S = diag(d̄₂/|d₂|)`, the
/// eigenvector matrix of the Strang control preconditioner; `V⁻¹ = V*/2`.
pub fn optctrl_eigenvector_matrix(nt: usize) -> Result<DMatrix<Complex64>> {
    if nt == 0 {
        return Err(ParadiagError::InvalidParameter("nt must be positive".into()));
    }
    let (_, d2) = strang_symbols(nt);
    let s = phases(&d2);
    let scale = 1.0 / (nt as f64).sqrt();
    let f_adj = DMatrix::from_fn(nt, nt, |j, k| {
        Complex64::from_polar(scale, -2.0 * std::f64::consts::PI * ((j * k) % nt) as f64 / nt as f64)
    });
    let mut v = DMatrix::zeros(2 * nt, 2 * nt);
    for j in 0..nt {
        for k in 0..nt {
            let f = f_adj[(j, k)];
            v[(j, k)] = f;
            v[(j, nt + k)] = f;
            v[(nt + j, k)] = -I * s[k] * f;
            v[(nt + j, nt + k)] = I * s[k] * f;
        }
    }
    Ok(v)
}

/// State, adjoint and control of a solved control problem.
#[derive(Debug, Clone)]
pub struct OptCtrlSolution {
    pub state: RealBlocks,
    pub adjoint: RealBlocks,
    pub control: RealBlocks,
    pub report: SolveReport,
}

/// GMRES on the `√γ`-scaled control system with the Strang preconditioner;
/// the control follows from `γũ = p`.
pub fn optctrl_solve(system: &SaddleSystem, cfg: &KrylovConfig, alpha: f64) -> Result<OptCtrlSolution> {
    let start = Instant::now();
    let scaled = system.scaled();
    let precond = OptCtrlPreconditioner::new(&scaled, alpha)?;
    let rhs = scaled.rhs();
    let x0 = vec![0.0; rhs.len()];
    let (x, mut report) = gmres(
        |v: &[f64]| scaled.matvec(v),
        |v: &[f64]| precond.apply_inverse(v),
        &rhs,
        &x0,
        cfg,
    )?;
    report.wall_time = start.elapsed();
    let (state, adjoint) = scaled.unscale_solution(&x)?;
    let inv_gamma = 1.0 / scaled.gamma;
    let control = RealBlocks::from_vec(
        adjoint.nt(),
        adjoint.nx(),
        adjoint.as_slice().par_iter().map(|p| p * inv_gamma).collect(),
    )?;
    Ok(OptCtrlSolution { state, adjoint, control, report })
}
