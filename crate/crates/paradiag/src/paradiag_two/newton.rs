//! Simplified Newton for `(B₁⊗M)u + (B₂⊗I)F(u) = b` with an α-circulant
//! Jacobian approximation built from one averaged Jacobian.

use std::time::Instant;

use krylov::SolveReport;
use rayon::prelude::*;

use crate::block::RealBlocks;
use crate::error::{check_dim, ParadiagError, Result};
use crate::linalg::SparseRealLu;
use crate::space::SpaceOperator;
use crate::spectral::{all_at_once_matvec, AlphaCirculantSolver, SolverOptions};
use crate::time_disc::{assemble_theta_system, circulant_modify_theta, TimeGrid};

/// Nonlinear right-hand side of `Mu' + F(u) = 0`.
pub trait NonlinearField: Sync {
    fn nx(&self) -> usize;
    fn eval(&self, u: &[f64]) -> Vec<f64>;
    fn jacobian(&self, u: &[f64]) -> SpaceOperator;
}

/// `F(u) = Au` for a fixed operator.
#[derive(Debug, Clone)]
pub struct LinearField(pub SpaceOperator);

impl NonlinearField for LinearField {
    fn nx(&self) -> usize {
        self.0.nx()
    }

    fn eval(&self, u: &[f64]) -> Vec<f64> {
        self.0.mul_vec(u)
    }

    fn jacobian(&self, _: &[f64]) -> SpaceOperator {
        self.0.clone()
    }
}

/// Componentwise `F(u)ᵢ = uᵢ³`.
#[derive(Debug, Clone, Copy)]
pub struct CubicDecay {
    pub nx: usize,
}

impl NonlinearField for CubicDecay {
    fn nx(&self) -> usize {
        self.nx
    }

    fn eval(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|x| x * x * x).collect()
    }

    fn jacobian(&self, u: &[f64]) -> SpaceOperator {
        let t: Vec<_> = u.iter().enumerate().map(|(i, x)| (i, i, 3.0 * x * x)).collect();
        SpaceOperator::from_triplets(self.nx, &t).expect("diagonal triplets are in range")
    }
}

/// How the time-varying Jacobians are collapsed into one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum JacobianAveraging {
    /// `(1/nt) Σₙ ∇F(Uₙ)`.
    #[default]
    MeanJacobian,
    /// `∇F((1/nt) Σₙ Uₙ)`.
    JacobianOfMean,
}

impl std::str::FromStr for JacobianAveraging {
    type Err = ParadiagError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean_jacobian" => Ok(Self::MeanJacobian),
            "jacobian_of_mean" => Ok(Self::JacobianOfMean),
            other => Err(ParadiagError::InvalidParameter(format!("unknown averaging '{other}'"))),
        }
    }
}

impl std::fmt::Display for JacobianAveraging {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::MeanJacobian => "mean_jacobian",
            Self::JacobianOfMean => "jacobian_of_mean",
        })
    }
}

/// θ-method discretization of `Mu' + F(u) = 0` on a uniform grid.
pub struct NonlinearThetaProblem<'a> {
    pub theta: f64,
    pub grid: TimeGrid,
    pub mass: SpaceOperator,
    pub field: &'a dyn NonlinearField,
    pub u0: Vec<f64>,
}

impl NonlinearThetaProblem<'_> {
    fn nx(&self) -> usize {
        self.field.nx()
    }

    /// Stencils `B₁`, `B₂` of the linearized system with `K = J`.
    fn linear_system(&self, jac: &SpaceOperator) -> Result<crate::time_disc::AllAtOnceSystem> {
        let zero = vec![0.0; self.nx()];
        let mut sys = assemble_theta_system(self.theta, &self.grid, jac, &zero, |_| zero.clone())?;
        sys.mass = self.mass.clone();
        Ok(sys)
    }

    /// Row 0: `Mu₀/Δt − (1−θ)F(u₀)`.
    fn rhs(&self) -> RealBlocks {
        let dt = self.grid.steps()[0];
        let mut b = RealBlocks::zeros(self.grid.nt(), self.nx());
        let mu = self.mass.mul_vec(&self.u0);
        let fu = self.field.eval(&self.u0);
        for ((r, m), f) in b.block_mut(0).iter_mut().zip(&mu).zip(&fu) {
            *r = m / dt - (1.0 - self.theta) * f;
        }
        b
    }

    /// `b − (B₁⊗M)u − (B₂⊗I)F(u)`.
    pub fn residual(&self, u: &RealBlocks) -> Result<RealBlocks> {
        let sys = self.linear_system(&SpaceOperator::zero(self.nx()))?;
        let nx = self.nx();
        let fu = RealBlocks::from_vec(
            u.nt(),
            nx,
            u.as_slice().par_chunks(nx).flat_map_iter(|b| self.field.eval(b)).collect(),
        )?;
        let id = SpaceOperator::identity(nx);
        let zero = SpaceOperator::zero(nx);
        let mass_part = all_at_once_matvec(&sys.b1, &sys.b2, &self.mass, &zero, u)?;
        let field_part = all_at_once_matvec(&sys.b1, &sys.b2, &zero, &id, &fu)?;
        let b = self.rhs();
        let data = b
            .as_slice()
            .iter()
            .zip(mass_part.as_slice())
            .zip(field_part.as_slice())
            .map(|((b, m), f)| b - m - f)
            .collect();
        RealBlocks::from_vec(u.nt(), nx, data)
    }

    fn averaged_jacobian(&self, u: &RealBlocks, averaging: JacobianAveraging) -> Result<SpaceOperator> {
        let nx = self.nx();
        let nt = u.nt() as f64;
        match averaging {
            JacobianAveraging::MeanJacobian => {
                let mut sum = SpaceOperator::zero(nx);
                for block in u.blocks() {
                    sum = sum.linear_combination(1.0, &self.field.jacobian(block), 1.0 / nt)?;
                }
                Ok(sum)
            }
            JacobianAveraging::JacobianOfMean => {
                let mut mean = vec![0.0; nx];
                for block in u.blocks() {
                    mean.iter_mut().zip(block).for_each(|(m, v)| *m += v / nt);
                }
                Ok(self.field.jacobian(&mean))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    pub alpha: f64,
    pub tol: f64,
    pub maxit: usize,
    pub averaging: JacobianAveraging,
    pub options: SolverOptions,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { alpha: 1e-2, tol: 1e-12, maxit: 50, averaging: JacobianAveraging::MeanJacobian, options: SolverOptions::default() }
    }
}

/// Consecutive residual increases that count as divergence.
pub const DIVERGENCE_STREAK: usize = 5;

/// `u^k = u^{k−1} + P_α(u^{k−1})⁻¹ r(u^{k−1})` from the constant initial
/// guess `Uₙ = u₀`, until `‖r‖∞ ≤ tol·max(1, ‖b‖∞)`.
pub fn nonlinear_newton_solve(problem: &NonlinearThetaProblem<'_>, cfg: &NewtonConfig) -> Result<(RealBlocks, SolveReport)> {
    let start = Instant::now();
    let (nt, nx) = (problem.grid.nt(), problem.nx());
    check_dim("initial value", nx, problem.u0.len())?;
    check_dim("mass operator", nx, problem.mass.nx())?;
    let mut u = RealBlocks::from_blocks(&vec![problem.u0.clone(); nt])?;
    let scale = problem.rhs().max_abs().max(1.0);
    let mut r = problem.residual(&u)?;
    let mut history = vec![r.max_abs() / scale];
    let mut streak = 0;
    let mut converged = false;
    for k in 1..=cfg.maxit {
        let jac = problem.averaged_jacobian(&u, cfg.averaging)?;
        let sys = problem.linear_system(&jac)?;
        let pair = circulant_modify_theta(&sys, cfg.alpha)?;
        let solver = AlphaCirculantSolver::new(pair, &problem.mass, &jac, cfg.options)?;
        let du = solver.apply_inverse(&r)?;
        u.as_mut_slice().iter_mut().zip(du.as_slice()).for_each(|(x, d)| *x += d);
        r = problem.residual(&u)?;
        let rel = r.max_abs() / scale;
        streak = if rel > *history.last().unwrap() { streak + 1 } else { 0 };
        history.push(rel);
        if !rel.is_finite() || streak >= DIVERGENCE_STREAK {
            return Err(ParadiagError::Divergence { iterations: k });
        }
        if rel <= cfg.tol {
            converged = true;
            break;
        }
    }
    let mut report = SolveReport {
        iterations: history.len() - 1,
        residual_history: history,
        wall_time: start.elapsed(),
        converged,
        status: if converged { "converged".into() } else { "maximum iterations reached".into() },
        ..SolveReport::default()
    };
    report.refresh_contraction();
    Ok((u, report))
}

/// Step-by-step θ-method with a full Newton solve per step; the oracle for
/// [`nonlinear_newton_solve`].
pub fn sequential_nonlinear_theta(problem: &NonlinearThetaProblem<'_>, newton_tol: f64) -> Result<RealBlocks> {
    let nx = problem.nx();
    let theta = problem.theta;
    let mut out = RealBlocks::zeros(problem.grid.nt(), nx);
    let mut prev = problem.u0.clone();
    for (n, &dt) in problem.grid.steps().iter().enumerate() {
        let m_prev = problem.mass.mul_vec(&prev);
        let f_prev = problem.field.eval(&prev);
        let known: Vec<f64> = (0..nx).map(|i| m_prev[i] / dt - (1.0 - theta) * f_prev[i]).collect();
        let mut x = prev.clone();
        let mut converged = false;
        for _ in 0..100 {
            let mx = problem.mass.mul_vec(&x);
            let fx = problem.field.eval(&x);
            let g: Vec<f64> = (0..nx).map(|i| known[i] - mx[i] / dt - theta * fx[i]).collect();
            let lu = SparseRealLu::shifted(1.0 / dt, &problem.mass, theta, &problem.field.jacobian(&x))?;
            let dx = lu.solve(&g)?;
            x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
            let step = dx.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
            if step <= newton_tol * x.iter().fold(1.0_f64, |m, v| m.max(v.abs())) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(ParadiagError::Divergence { iterations: 100 });
        }
        out.block_mut(n).copy_from_slice(&x);
        prev = x;
    }
    Ok(out)
}
