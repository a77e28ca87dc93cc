//! Time grids, all-at-once assemblies for every scheme, and the sequential
//! reference solvers they must agree with.

use nalgebra::{DMatrix, DVector};

use crate::block::RealBlocks;
use crate::error::{check_dim, ParadiagError, Result};
use crate::linalg::SparseRealLu;
use crate::problems::ProblemInstance;
use crate::space::SpaceOperator;
use crate::spectral::{all_at_once_matvec, AlphaCirculantPair};
use crate::time_matrix::TimeMatrix;

/// Step sizes `Δt₁, …, Δt_nt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    steps: Vec<f64>,
    uniform: bool,
}

impl TimeGrid {
    pub fn from_steps(steps: Vec<f64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(ParadiagError::InvalidParameter("time grid needs at least one step".into()));
        }
        if let Some(s) = steps.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(ParadiagError::InvalidParameter(format!("time steps must be positive, got {s}")));
        }
        let uniform = steps.iter().all(|&s| s == steps[0]);
        Ok(Self { steps, uniform })
    }

    pub fn uniform(nt: usize, dt: f64) -> Result<Self> {
        Self::from_steps(vec![dt; nt])
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn nt(&self) -> usize {
        self.steps.len()
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// `t₀ = 0, t₁, …, t_nt`.
    pub fn times(&self) -> Vec<f64> {
        let mut t = Vec::with_capacity(self.steps.len() + 1);
        t.push(0.0);
        let mut acc = 0.0;
        for s in &self.steps {
            acc += s;
            t.push(acc);
        }
        t
    }

    pub fn total(&self) -> f64 {
        self.steps.iter().sum()
    }

    fn uniform_step(&self, context: &str) -> Result<f64> {
        if self.uniform {
            Ok(self.steps[0])
        } else {
            Err(ParadiagError::InvalidParameter(format!("{context} requires a uniform time grid")))
        }
    }
}

/// `Δtₙ = Δt_last·τ^{n−nt}`, `n = 1..nt`.
pub fn geometric_grid(tau: f64, dt_last: f64, nt: usize) -> Result<TimeGrid> {
    if !(tau > 1.0) {
        return Err(ParadiagError::InvalidParameter(format!("tau must exceed 1, got {tau}")));
    }
    if nt == 0 {
        return Err(ParadiagError::InvalidParameter("nt must be positive".into()));
    }
    TimeGrid::from_steps((1..=nt).map(|n| dt_last * tau.powi(n as i32 - nt as i32)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// One-step θ-method; 1 is backward Euler, 1/2 the trapezoidal rule.
    Theta(f64),
    /// Explicit midpoint steps closed by one backward-Euler step.
    Hybrid,
    /// The hybrid scheme applied to `U'' + AU = F` with velocities eliminated.
    HybridSecondOrder,
    /// Implicit leap-frog for `U'' + AU = F`.
    Leapfrog,
}

/// `(B₁⊗M + B₂⊗K)u = b`.
#[derive(Debug, Clone)]
pub struct AllAtOnceSystem {
    pub b1: TimeMatrix,
    pub b2: TimeMatrix,
    pub mass: SpaceOperator,
    pub stiffness: SpaceOperator,
    pub rhs: RealBlocks,
    pub scheme: Scheme,
    pub grid: TimeGrid,
}

impl AllAtOnceSystem {
    pub fn nt(&self) -> usize {
        self.b1.n()
    }

    pub fn nx(&self) -> usize {
        self.mass.nx()
    }

    pub fn matvec(&self, u: &RealBlocks) -> Result<RealBlocks> {
        all_at_once_matvec(&self.b1, &self.b2, &self.mass, &self.stiffness, u)
    }

    /// `b − Au`.
    pub fn residual(&self, u: &RealBlocks) -> Result<RealBlocks> {
        let au = self.matvec(u)?;
        let data = self.rhs.as_slice().iter().zip(au.as_slice()).map(|(b, a)| b - a).collect();
        RealBlocks::from_vec(self.nt(), self.nx(), data)
    }

    /// Entries of `B₁⊗M + B₂⊗K` as triplets.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let nx = self.nx();
        let mut t = Vec::new();
        for n in 0..self.nt() {
            for (op, b) in [(&self.mass, &self.b1), (&self.stiffness, &self.b2)] {
                for (m, v) in b.row(n) {
                    t.extend(op.triplets().map(|(i, j, w)| (n * nx + i, m * nx + j, v * w)));
                }
            }
        }
        t
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.nt() * self.nx();
        let mut a = DMatrix::zeros(n, n);
        for (i, j, v) in self.triplets() {
            a[(i, j)] += v;
        }
        a
    }

    /// Sparse direct solve of the whole system (an oracle, not a PinT method).
    pub fn solve_direct(&self) -> Result<RealBlocks> {
        let lu = SparseRealLu::new(self.nt() * self.nx(), &self.triplets())?;
        RealBlocks::from_vec(self.nt(), self.nx(), lu.solve(self.rhs.as_slice())?)
    }

    /// α-circulant pair built from the first columns of lower-banded
    /// Toeplitz stencils (θ-method and leap-frog systems).
    pub fn circulant_pair(&self, alpha: f64) -> Result<AlphaCirculantPair> {
        self.grid.uniform_step("circulant modification")?;
        if self.b1.upper_bandwidth() > 0 || self.b2.upper_bandwidth() > 0 || !self.b1.is_toeplitz() || !self.b2.is_toeplitz() {
            return Err(ParadiagError::InvalidParameter(
                "circulant modification needs lower-triangular Toeplitz stencils".into(),
            ));
        }
        let nt = self.nt();
        let (c1, c2) = match self.scheme {
            // With nt = 2 the band no longer fits, so rebuild the full stencils.
            Scheme::Leapfrog => {
                let (s1, s2) = leapfrog_stencils(self.grid.steps()[0]);
                (fold_stencil(&s1, nt, alpha), fold_stencil(&s2, nt, alpha))
            }
            _ => (self.b1.first_column(), self.b2.first_column()),
        };
        AlphaCirculantPair::new(c1, c2, alpha)
    }
}

fn leapfrog_stencils(dt: f64) -> (Vec<f64>, Vec<f64>) {
    let inv2 = 1.0 / (dt * dt);
    (vec![inv2, -2.0 * inv2, inv2], vec![0.5, 0.0, 0.5])
}

/// First column of `Σₖ cₖ Z^k` where `Zⁿᵗ = αI`: entries past `nt` wrap
/// around with an extra factor `α`.
fn fold_stencil(stencil: &[f64], nt: usize, alpha: f64) -> Vec<f64> {
    let mut col = vec![0.0; nt];
    for (k, &c) in stencil.iter().enumerate() {
        col[k % nt] += alpha.powi((k / nt) as i32) * c;
    }
    col
}

fn validate_u(nx: usize, v: &[f64], what: &'static str) -> Result<()> {
    check_dim(what, nx, v.len())
}

/// θ-method on a (possibly non-uniform) grid:
/// `(Uₙ − Uₙ₋₁)/Δtₙ + θAUₙ + (1−θ)AUₙ₋₁ = θf(tₙ) + (1−θ)f(tₙ₋₁)`.
pub fn assemble_theta_system(
    theta: f64,
    grid: &TimeGrid,
    a: &SpaceOperator,
    u0: &[f64],
    forcing: impl Fn(f64) -> Vec<f64>,
) -> Result<AllAtOnceSystem> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(ParadiagError::InvalidParameter(format!("theta must lie in (0,1], got {theta}")));
    }
    let nx = a.nx();
    validate_u(nx, u0, "initial value")?;
    let nt = grid.nt();
    let mut b1 = TimeMatrix::zeros(nt, 1, 0);
    let mut b2 = TimeMatrix::zeros(nt, 1, 0);
    for (n, &dt) in grid.steps().iter().enumerate() {
        b1.set(n, n, 1.0 / dt);
        b2.set(n, n, theta);
        if n > 0 {
            b1.set(n, n - 1, -1.0 / dt);
            b2.set(n, n - 1, 1.0 - theta);
        }
    }
    let times = grid.times();
    let mut rhs = RealBlocks::zeros(nt, nx);
    let mut f_prev = forcing(times[0]);
    for n in 0..nt {
        let f_next = forcing(times[n + 1]);
        validate_u(nx, &f_next, "forcing")?;
        for ((r, fp), fn_) in rhs.block_mut(n).iter_mut().zip(&f_prev).zip(&f_next) {
            *r = theta * fn_ + (1.0 - theta) * fp;
        }
        f_prev = f_next;
    }
    let au0 = a.mul_vec(u0);
    let dt1 = grid.steps()[0];
    for ((r, u), au) in rhs.block_mut(0).iter_mut().zip(u0).zip(&au0) {
        *r += u / dt1 - (1.0 - theta) * au;
    }
    Ok(AllAtOnceSystem {
        b1,
        b2,
        mass: SpaceOperator::identity(nx),
        stiffness: a.clone(),
        rhs,
        scheme: Scheme::Theta(theta),
        grid: grid.clone(),
    })
}

/// `C₁ = circ((1, −1, 0, …)/Δt)`, `C₂ = circ(θ, 1−θ, 0, …)` with corner weight α.
pub fn circulant_modify_theta(system: &AllAtOnceSystem, alpha: f64) -> Result<AlphaCirculantPair> {
    let Scheme::Theta(theta) = system.scheme else {
        return Err(ParadiagError::InvalidParameter("expected a theta-method system".into()));
    };
    let dt = system.grid.uniform_step("circulant modification")?;
    let nt = system.nt();
    let mut c1 = vec![0.0; nt];
    let mut c2 = vec![0.0; nt];
    c1[0] = 1.0 / dt;
    c2[0] = theta;
    if nt > 1 {
        c1[1] = -1.0 / dt;
        c2[1] = 1.0 - theta;
    } else {
        // A single step wraps onto itself.
        c1[0] -= alpha / dt;
        c2[0] += alpha * (1.0 - theta);
    }
    AlphaCirculantPair::new(c1, c2, alpha)
}

/// Integer skeleton of `2Δt·B` for the hybrid scheme.
fn hybrid_skeleton(nt: usize) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(nt, nt);
    for r in 0..nt - 1 {
        if r > 0 {
            b[(r, r - 1)] = -1.0;
        }
        b[(r, r + 1)] = 1.0;
    }
    b[(nt - 1, nt - 2)] = -2.0;
    b[(nt - 1, nt - 1)] = 2.0;
    b
}

/// Time matrix `B` of the hybrid scheme.
pub fn hybrid_matrix(nt: usize, dt: f64) -> Result<TimeMatrix> {
    if nt < 2 {
        return Err(ParadiagError::InvalidParameter(format!("hybrid scheme needs nt >= 2, got {nt}")));
    }
    TimeMatrix::from_dense(&(hybrid_skeleton(nt) * (1.0 / (2.0 * dt))))
}

/// `B² = S²/(4Δt²)` with the integer skeleton `S = 2Δt·B` squared exactly.
pub fn hybrid_second_order_matrix(nt: usize, dt: f64) -> Result<TimeMatrix> {
    if nt < 3 {
        return Err(ParadiagError::InvalidParameter(format!("second-order hybrid scheme needs nt >= 3, got {nt}")));
    }
    let s = hybrid_skeleton(nt);
    TimeMatrix::from_dense(&(&s * &s * (1.0 / (4.0 * dt * dt))))
}

fn add_forcing(rhs: &mut RealBlocks, nx: usize, times: impl Iterator<Item = (usize, f64)>, forcing: &impl Fn(f64) -> Vec<f64>) -> Result<()> {
    for (n, t) in times {
        let f = forcing(t);
        validate_u(nx, &f, "forcing")?;
        rhs.block_mut(n).iter_mut().zip(&f).for_each(|(r, v)| *r += v);
    }
    Ok(())
}

/// Hybrid scheme: `(Uₙ₊₁ − Uₙ₋₁)/(2Δt) + AUₙ = f(tₙ)` for `n < nt`, then
/// `(U_nt − U_{nt−1})/Δt + AU_nt = f(t_nt)`.
pub fn assemble_hybrid_system(
    nt: usize,
    dt: f64,
    a: &SpaceOperator,
    u0: &[f64],
    forcing: impl Fn(f64) -> Vec<f64>,
) -> Result<AllAtOnceSystem> {
    let b1 = hybrid_matrix(nt, dt)?;
    let nx = a.nx();
    validate_u(nx, u0, "initial value")?;
    let mut rhs = RealBlocks::zeros(nt, nx);
    rhs.block_mut(0).iter_mut().zip(u0).for_each(|(r, u)| *r = u / (2.0 * dt));
    add_forcing(&mut rhs, nx, (0..nt).map(|n| (n, (n + 1) as f64 * dt)), &forcing)?;
    Ok(AllAtOnceSystem {
        b1,
        b2: TimeMatrix::lower_toeplitz(nt, &[1.0]),
        mass: SpaceOperator::identity(nx),
        stiffness: a.clone(),
        rhs,
        scheme: Scheme::Hybrid,
        grid: TimeGrid::uniform(nt, dt)?,
    })
}

/// Second-order hybrid system `(B²⊗I + I⊗A)U = b`. The right-hand side comes
/// from eliminating the velocities of the doubled first-order system:
/// `b = b_V + F + (B⊗I)b_U`.
pub fn assemble_hybrid_second_order(
    nt: usize,
    dt: f64,
    a: &SpaceOperator,
    u0: &[f64],
    u0dot: &[f64],
    forcing: impl Fn(f64) -> Vec<f64>,
) -> Result<AllAtOnceSystem> {
    let b1 = hybrid_second_order_matrix(nt, dt)?;
    let nx = a.nx();
    validate_u(nx, u0, "initial value")?;
    validate_u(nx, u0dot, "initial velocity")?;
    let mut rhs = RealBlocks::zeros(nt, nx);
    rhs.block_mut(0).iter_mut().zip(u0dot).for_each(|(r, v)| *r = v / (2.0 * dt));
    rhs.block_mut(1).iter_mut().zip(u0).for_each(|(r, u)| *r = -u / (4.0 * dt * dt));
    add_forcing(&mut rhs, nx, (0..nt).map(|n| (n, (n + 1) as f64 * dt)), &forcing)?;
    Ok(AllAtOnceSystem {
        b1,
        b2: TimeMatrix::lower_toeplitz(nt, &[1.0]),
        mass: SpaceOperator::identity(nx),
        stiffness: a.clone(),
        rhs,
        scheme: Scheme::HybridSecondOrder,
        grid: TimeGrid::uniform(nt, dt)?,
    })
}

/// Implicit leap-frog for `U'' + AU = F`:
/// `(Uₙ₊₁ − 2Uₙ + Uₙ₋₁)/Δt² + A(Uₙ₊₁ + Uₙ₋₁)/2 = f(tₙ)`, started by
/// `U₁/Δt² + AU₁/2 = f(0)/2 + u₀/Δt² + u₁/Δt`, i.e.
/// `U₁ = u₀ + Δt·u₁ + Δt²/2·(f(0) − AU₁)`.
pub fn assemble_leapfrog_system(
    nt: usize,
    dt: f64,
    a: &SpaceOperator,
    u0: &[f64],
    u1: &[f64],
    forcing: impl Fn(f64) -> Vec<f64>,
) -> Result<AllAtOnceSystem> {
    if nt < 2 {
        return Err(ParadiagError::InvalidParameter(format!("leap-frog needs nt >= 2, got {nt}")));
    }
    let nx = a.nx();
    validate_u(nx, u0, "initial value")?;
    validate_u(nx, u1, "initial velocity")?;
    let inv2 = 1.0 / (dt * dt);
    let (s1, s2) = leapfrog_stencils(dt);
    let b1 = TimeMatrix::lower_toeplitz(nt, &s1);
    let b2 = TimeMatrix::lower_toeplitz(nt, &s2);
    let mut rhs = RealBlocks::zeros(nt, nx);
    let f0 = forcing(0.0);
    validate_u(nx, &f0, "forcing")?;
    for (((r, f), u), v) in rhs.block_mut(0).iter_mut().zip(&f0).zip(u0).zip(u1) {
        *r = 0.5 * f + u * inv2 + v / dt;
    }
    let au0 = a.mul_vec(u0);
    for ((r, u), au) in rhs.block_mut(1).iter_mut().zip(u0).zip(&au0) {
        *r = -u * inv2 - 0.5 * au;
    }
    add_forcing(&mut rhs, nx, (1..nt).map(|n| (n, n as f64 * dt)), &forcing)?;
    Ok(AllAtOnceSystem {
        b1,
        b2,
        mass: SpaceOperator::identity(nx),
        stiffness: a.clone(),
        rhs,
        scheme: Scheme::Leapfrog,
        grid: TimeGrid::uniform(nt, dt)?,
    })
}

/// Builds the all-at-once system of `scheme` for a model problem.
pub fn assemble(scheme: Scheme, problem: &ProblemInstance, grid: &TimeGrid) -> Result<AllAtOnceSystem> {
    let f = |t: f64| problem.forcing_at(t);
    let velocity = || {
        problem
            .u1
            .as_deref()
            .ok_or_else(|| ParadiagError::InvalidParameter("second-order scheme needs an initial velocity".into()))
    };
    match scheme {
        Scheme::Theta(theta) => assemble_theta_system(theta, grid, &problem.operator, &problem.u0, f),
        Scheme::Hybrid => {
            assemble_hybrid_system(grid.nt(), grid.uniform_step("hybrid scheme")?, &problem.operator, &problem.u0, f)
        }
        Scheme::HybridSecondOrder => assemble_hybrid_second_order(
            grid.nt(),
            grid.uniform_step("hybrid scheme")?,
            &problem.operator,
            &problem.u0,
            velocity()?,
            f,
        ),
        Scheme::Leapfrog => assemble_leapfrog_system(
            grid.nt(),
            grid.uniform_step("leap-frog")?,
            &problem.operator,
            &problem.u0,
            velocity()?,
            f,
        ),
    }
}

/// Coupled state/adjoint system of the wave control problem. Every row is
/// multiplied by `Δt²`, so `B₁ = (1, −2, 1)` and `B₂ = Δt²/2·(1, 0, 1)`;
/// unknowns are `u¹…u^nt` and `p⁰…p^{nt−1}`:
///
/// ```text
/// (B₁⊗I + B₂⊗A)u − κ_u (Î⊗I)p = f-block
/// (B₁ᵀ⊗I + B₂ᵀ⊗A)p + κ_p (Ǐ⊗I)u = g-block
/// ```
///
/// with `(κ_u, κ_p) = (Δt²/γ, Δt²)` before and `(Δt²/√γ, Δt²/√γ)` after the
/// similarity scaling `u ↦ √γ·u`.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub nt: usize,
    pub dt: f64,
    pub gamma: f64,
    pub b1: TimeMatrix,
    pub b2: TimeMatrix,
    pub b1t: TimeMatrix,
    pub b2t: TimeMatrix,
    pub i_hat: Vec<f64>,
    pub i_check: Vec<f64>,
    pub a: SpaceOperator,
    pub rhs_f: RealBlocks,
    pub rhs_g: RealBlocks,
    pub scaled: bool,
}

/// Data of the control problem: initial state and velocity, state source
/// `f` and adjoint source `g`.
pub struct OptCtrlData<'a> {
    pub u0: &'a [f64],
    pub u1: &'a [f64],
    pub f: &'a dyn Fn(f64) -> Vec<f64>,
    pub g: &'a dyn Fn(f64) -> Vec<f64>,
}

impl SaddleSystem {
    pub fn nx(&self) -> usize {
        self.a.nx()
    }

    /// `(κ_u, κ_p)` coupling weights.
    pub fn couplings(&self) -> (f64, f64) {
        let dt2 = self.dt * self.dt;
        if self.scaled {
            let c = dt2 / self.gamma.sqrt();
            (c, c)
        } else {
            (dt2 / self.gamma, dt2)
        }
    }

    /// Stacked right-hand side `[f-block; g-block]`.
    pub fn rhs(&self) -> Vec<f64> {
        let mut v = self.rhs_f.as_slice().to_vec();
        v.extend_from_slice(self.rhs_g.as_slice());
        v
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (nt, nx) = (self.nt, self.nx());
        check_dim("saddle matvec", 2 * nt * nx, x.len())?;
        let u = RealBlocks::from_vec(nt, nx, x[..nt * nx].to_vec())?;
        let p = RealBlocks::from_vec(nt, nx, x[nt * nx..].to_vec())?;
        let id = SpaceOperator::identity(nx);
        let mut top = all_at_once_matvec(&self.b1, &self.b2, &id, &self.a, &u)?.into_vec();
        let mut bottom = all_at_once_matvec(&self.b1t, &self.b2t, &id, &self.a, &p)?.into_vec();
        let (ku, kp) = self.couplings();
        for n in 0..nt {
            for j in 0..nx {
                let k = n * nx + j;
                top[k] -= ku * self.i_hat[n] * p.as_slice()[k];
                bottom[k] += kp * self.i_check[n] * u.as_slice()[k];
            }
        }
        top.extend(bottom);
        Ok(top)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let (nt, nx) = (self.nt, self.nx());
        let id = DMatrix::identity(nx, nx);
        let a = self.a.to_dense();
        let diag_block = |b1: &TimeMatrix, b2: &TimeMatrix| b1.to_dense().kronecker(&id) + b2.to_dense().kronecker(&a);
        let (ku, kp) = self.couplings();
        let ih = DMatrix::from_diagonal(&DVector::from_vec(self.i_hat.clone())).kronecker(&id) * (-ku);
        let ic = DMatrix::from_diagonal(&DVector::from_vec(self.i_check.clone())).kronecker(&id) * kp;
        let n = nt * nx;
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&diag_block(&self.b1, &self.b2));
        m.view_mut((0, n), (n, n)).copy_from(&ih);
        m.view_mut((n, 0), (n, n)).copy_from(&ic);
        m.view_mut((n, n), (n, n)).copy_from(&diag_block(&self.b1t, &self.b2t));
        m
    }

    /// Applies the `√γ` similarity scaling (no-op if already scaled).
    pub fn scaled(&self) -> Self {
        if self.scaled {
            return self.clone();
        }
        let mut out = self.clone();
        let s = self.gamma.sqrt();
        out.rhs_f.as_mut_slice().iter_mut().for_each(|v| *v *= s);
        out.scaled = true;
        out
    }

    /// Splits a solution vector into `(u, p)`, undoing the state scaling.
    pub fn unscale_solution(&self, x: &[f64]) -> Result<(RealBlocks, RealBlocks)> {
        let (nt, nx) = (self.nt, self.nx());
        check_dim("saddle solution", 2 * nt * nx, x.len())?;
        let s = if self.scaled { 1.0 / self.gamma.sqrt() } else { 1.0 };
        let u = RealBlocks::from_vec(nt, nx, x[..nt * nx].iter().map(|v| v * s).collect())?;
        let p = RealBlocks::from_vec(nt, nx, x[nt * nx..].to_vec())?;
        Ok((u, p))
    }
}

/// Builds the control system and returns its `√γ`-scaled form.
pub fn assemble_optctrl_system(
    nt: usize,
    dt: f64,
    a: &SpaceOperator,
    gamma: f64,
    data: &OptCtrlData<'_>,
) -> Result<SaddleSystem> {
    Ok(assemble_optctrl_unscaled(nt, dt, a, gamma, data)?.scaled())
}

/// The control system before the `√γ` scaling.
pub fn assemble_optctrl_unscaled(
    nt: usize,
    dt: f64,
    a: &SpaceOperator,
    gamma: f64,
    data: &OptCtrlData<'_>,
) -> Result<SaddleSystem> {
    if !(gamma > 0.0) {
        return Err(ParadiagError::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    if nt < 3 {
        return Err(ParadiagError::InvalidParameter(format!("control problem needs nt >= 3, got {nt}")));
    }
    let nx = a.nx();
    validate_u(nx, data.u0, "initial value")?;
    validate_u(nx, data.u1, "initial velocity")?;
    let dt2 = dt * dt;
    let b1 = TimeMatrix::lower_toeplitz(nt, &[1.0, -2.0, 1.0]);
    let b2 = TimeMatrix::lower_toeplitz(nt, &[0.5 * dt2, 0.0, 0.5 * dt2]);
    let mut i_hat = vec![1.0; nt];
    i_hat[0] = 0.5;
    let mut i_check = vec![1.0; nt];
    i_check[nt - 1] = 0.5;

    let mut rhs_f = RealBlocks::zeros(nt, nx);
    let f0 = (data.f)(0.0);
    validate_u(nx, &f0, "state source")?;
    for (((r, f), u), v) in rhs_f.block_mut(0).iter_mut().zip(&f0).zip(data.u0).zip(data.u1) {
        *r = 0.5 * dt2 * f + u + dt * v;
    }
    let au0 = a.mul_vec(data.u0);
    for ((r, u), au) in rhs_f.block_mut(1).iter_mut().zip(data.u0).zip(&au0) {
        *r = -u - 0.5 * dt2 * au;
    }
    for n in 1..nt {
        let f = (data.f)(n as f64 * dt);
        validate_u(nx, &f, "state source")?;
        rhs_f.block_mut(n).iter_mut().zip(&f).for_each(|(r, v)| *r += dt2 * v);
    }
    let mut rhs_g = RealBlocks::zeros(nt, nx);
    for j in 0..nt {
        let g = (data.g)((j + 1) as f64 * dt);
        validate_u(nx, &g, "adjoint source")?;
        let w = if j + 1 == nt { 0.5 } else { 1.0 };
        rhs_g.block_mut(j).iter_mut().zip(&g).for_each(|(r, v)| *r = w * dt2 * v);
    }
    Ok(SaddleSystem {
        nt,
        dt,
        gamma,
        b1t: b1.transpose(),
        b2t: b2.transpose(),
        b1,
        b2,
        i_hat,
        i_check,
        a: a.clone(),
        rhs_f,
        rhs_g,
        scaled: false,
    })
}

/// Marches the θ-method step by step.
pub fn sequential_theta(
    theta: f64,
    grid: &TimeGrid,
    a: &SpaceOperator,
    u0: &[f64],
    forcing: impl Fn(f64) -> Vec<f64>,
) -> Result<RealBlocks> {
    let nx = a.nx();
    validate_u(nx, u0, "initial value")?;
    let id = SpaceOperator::identity(nx);
    let times = grid.times();
    let mut out = RealBlocks::zeros(grid.nt(), nx);
    let mut prev = u0.to_vec();
    let mut factor: Option<(f64, SparseRealLu)> = None;
    for (n, &dt) in grid.steps().iter().enumerate() {
        if factor.as_ref().map_or(true, |(d, _)| *d != dt) {
            factor = Some((dt, SparseRealLu::shifted(1.0 / dt, &id, theta, a)?));
        }
        let f_old = forcing(times[n]);
        let f_new = forcing(times[n + 1]);
        let a_prev = a.mul_vec(&prev);
        let rhs: Vec<f64> = (0..nx)
            .map(|i| prev[i] / dt - (1.0 - theta) * a_prev[i] + theta * f_new[i] + (1.0 - theta) * f_old[i])
            .collect();
        let next = factor.as_ref().unwrap().1.solve(&rhs)?;
        out.block_mut(n).copy_from_slice(&next);
        prev = next;
    }
    Ok(out)
}

/// Marches the implicit leap-frog scheme step by step.
pub fn sequential_leapfrog(
    nt: usize,
    dt: f64,
    a: &SpaceOperator,
    u0: &[f64],
    u1: &[f64],
    forcing: impl Fn(f64) -> Vec<f64>,
) -> Result<RealBlocks> {
    let nx = a.nx();
    validate_u(nx, u0, "initial value")?;
    validate_u(nx, u1, "initial velocity")?;
    let inv2 = 1.0 / (dt * dt);
    let lu = SparseRealLu::shifted(inv2, &SpaceOperator::identity(nx), 0.5, a)?;
    let mut out = RealBlocks::zeros(nt, nx);
    let f0 = forcing(0.0);
    let first: Vec<f64> = (0..nx).map(|i| 0.5 * f0[i] + u0[i] * inv2 + u1[i] / dt).collect();
    let mut cur = lu.solve(&first)?;
    let mut prev = u0.to_vec();
    out.block_mut(0).copy_from_slice(&cur);
    for n in 1..nt {
        let f = forcing(n as f64 * dt);
        let a_prev = a.mul_vec(&prev);
        let rhs: Vec<f64> = (0..nx).map(|i| f[i] + (2.0 * cur[i] - prev[i]) * inv2 - 0.5 * a_prev[i]).collect();
        let next = lu.solve(&rhs)?;
        out.block_mut(n).copy_from_slice(&next);
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(out)
}

/// Reference for the hybrid scheme. Its midpoint rows need `U₁`, which is
/// only fixed by the closing backward-Euler row, so the scheme has no
/// marching form; the reference solves the equations row by row assembled
/// as one sparse system.
pub fn sequential_hybrid(
    nt: usize,
    dt: f64,
    a: &SpaceOperator,
    u0: &[f64],
    forcing: impl Fn(f64) -> Vec<f64>,
) -> Result<RealBlocks> {
    if nt < 2 {
        return Err(ParadiagError::InvalidParameter(format!("hybrid scheme needs nt >= 2, got {nt}")));
    }
    let nx = a.nx();
    validate_u(nx, u0, "initial value")?;
    let mut t = Vec::new();
    let mut rhs = vec![0.0; nt * nx];
    // Row r holds the equation at time level n = r + 1; unknown U_n sits at block n − 1.
    for r in 0..nt {
        let n = r + 1;
        let f = forcing(n as f64 * dt);
        rhs[r * nx..(r + 1) * nx].copy_from_slice(&f);
        t.extend(a.triplets().map(|(i, j, v)| (r * nx + i, r * nx + j, v)));
        let (w_next, w_prev) = if n < nt { (0.5 / dt, -0.5 / dt) } else { (1.0 / dt, -1.0 / dt) };
        let next = if n < nt { n + 1 } else { n };
        for i in 0..nx {
            t.push((r * nx + i, (next - 1) * nx + i, w_next));
            if n >= 2 {
                t.push((r * nx + i, (n - 2) * nx + i, w_prev));
            } else {
                rhs[r * nx + i] -= w_prev * u0[i];
            }
        }
    }
    let lu = SparseRealLu::new(nt * nx, &t)?;
    RealBlocks::from_vec(nt, nx, lu.solve(&rhs)?)
}

/// Reference for the second-order hybrid scheme: the doubled first-order
/// hybrid system for `(U, V)` with `V = U'`, solved as one sparse system;
/// returns the `U` blocks.
pub fn sequential_hybrid_second_order(
    nt: usize,
    dt: f64,
    a: &SpaceOperator,
    u0: &[f64],
    v0: &[f64],
    forcing: impl Fn(f64) -> Vec<f64>,
) -> Result<RealBlocks> {
    if nt < 3 {
        return Err(ParadiagError::InvalidParameter(format!("second-order hybrid scheme needs nt >= 3, got {nt}")));
    }
    let nx = a.nx();
    validate_u(nx, u0, "initial value")?;
    validate_u(nx, v0, "initial velocity")?;
    let w = 2 * nx;
    let mut t = Vec::new();
    let mut rhs = vec![0.0; nt * w];
    for r in 0..nt {
        let n = r + 1;
        let (w_next, w_prev) = if n < nt { (0.5 / dt, -0.5 / dt) } else { (1.0 / dt, -1.0 / dt) };
        let next = if n < nt { n + 1 } else { n };
        let f = forcing(n as f64 * dt);
        let row = r * w;
        for i in 0..nx {
            // U' − V = 0
            t.push((row + i, (next - 1) * w + i, w_next));
            t.push((row + i, r * w + nx + i, -1.0));
            // V' + AU = f
            t.push((row + nx + i, (next - 1) * w + nx + i, w_next));
            rhs[row + nx + i] = f[i];
            if n >= 2 {
                t.push((row + i, (n - 2) * w + i, w_prev));
                t.push((row + nx + i, (n - 2) * w + nx + i, w_prev));
            } else {
                rhs[row + i] -= w_prev * u0[i];
                rhs[row + nx + i] -= w_prev * v0[i];
            }
        }
        t.extend(a.triplets().map(|(i, j, v)| (row + nx + i, r * w + j, v)));
    }
    let lu = SparseRealLu::new(nt * w, &t)?;
    let x = lu.solve(&rhs)?;
    let mut out = RealBlocks::zeros(nt, nx);
    for n in 0..nt {
        out.block_mut(n).copy_from_slice(&x[n * w..n * w + nx]);
    }
    Ok(out)
}

/// Step-by-step reference solution of `scheme` on `problem`.
pub fn sequential_solve(scheme: Scheme, problem: &ProblemInstance, grid: &TimeGrid) -> Result<RealBlocks> {
    let f = |t: f64| problem.forcing_at(t);
    let a = &problem.operator;
    let velocity = || {
        problem
            .u1
            .as_deref()
            .ok_or_else(|| ParadiagError::InvalidParameter("second-order scheme needs an initial velocity".into()))
    };
    match scheme {
        Scheme::Theta(theta) => sequential_theta(theta, grid, a, &problem.u0, f),
        Scheme::Hybrid => sequential_hybrid(grid.nt(), grid.uniform_step("hybrid scheme")?, a, &problem.u0, f),
        Scheme::HybridSecondOrder => sequential_hybrid_second_order(
            grid.nt(),
            grid.uniform_step("hybrid scheme")?,
            a,
            &problem.u0,
            velocity()?,
            f,
        ),
        Scheme::Leapfrog => {
            sequential_leapfrog(grid.nt(), grid.uniform_step("leap-frog")?, a, &problem.u0, velocity()?, f)
        }
    }
}

/// Largest operator for which the dense exponential is formed.
pub const EXPM_MAX_NX: usize = 512;

/// `exp(−tA)u₀` at each requested time, by dense matrix exponential.
pub fn reference_matrix_exponential(a: &SpaceOperator, u0: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let nx = a.nx();
    validate_u(nx, u0, "initial value")?;
    if nx > EXPM_MAX_NX {
        return Err(ParadiagError::TooLarge { context: "matrix exponential", size: nx, cap: EXPM_MAX_NX });
    }
    let dense = a.to_dense();
    let u = DVector::from_column_slice(u0);
    Ok(times.iter().map(|&t| ((&dense * (-t)).exp() * &u).as_slice().to_vec()).collect())
}

/// Scaled control system of a control model problem with `nt` steps on
/// `(0, T]`.
pub fn assemble_optctrl_problem(problem: &ProblemInstance, nt: usize) -> Result<SaddleSystem> {
    let missing = |what: &str| ParadiagError::InvalidParameter(format!("control problem lacks {what}"));
    let gamma = problem.gamma.ok_or_else(|| missing("gamma"))?;
    let u1 = problem.u1.as_deref().ok_or_else(|| missing("an initial velocity"))?;
    let g_field = problem.adjoint_forcing.clone().ok_or_else(|| missing("an adjoint source"))?;
    let f = |t: f64| problem.forcing_at(t);
    let g = |t: f64| g_field(&problem.grid, t);
    let data = OptCtrlData { u0: &problem.u0, u1, f: &f, g: &g };
    assemble_optctrl_system(nt, problem.t_final / nt as f64, &problem.operator, gamma, &data)
}
