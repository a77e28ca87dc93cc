//! Stationary α-circulant iterations: waveform relaxation with a head-tail
//! coupling, and the generic residual-correction form.

use std::time::Instant;

use krylov::SolveReport;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::block::RealBlocks;
use crate::error::{check_dim, ParadiagError, Result};
use crate::spectral::{AlphaCirculantPair, AlphaCirculantSolver, SolverOptions};
use crate::time_disc::{circulant_modify_theta, AllAtOnceSystem};

/// When a stationary iteration counts as converged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum StoppingRule {
    /// `‖u^k − u^{k−1}‖∞ ≤ tol`.
    #[default]
    Increment,
    /// `‖b − Au^k‖∞ / ‖b‖∞ ≤ tol`.
    Residual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryConfig {
    pub tol: f64,
    pub maxit: usize,
    pub stopping: StoppingRule,
    pub options: SolverOptions,
}

impl StationaryConfig {
    pub fn new(tol: f64, maxit: usize) -> Result<Self> {
        if !(tol > 0.0) || maxit == 0 {
            return Err(ParadiagError::InvalidParameter(format!(
                "need tol > 0 and maxit >= 1, got tol={tol}, maxit={maxit}"
            )));
        }
        Ok(Self { tol, maxit, stopping: StoppingRule::Increment, options: SolverOptions::default() })
    }

    pub fn with_stopping(mut self, stopping: StoppingRule) -> Self {
        self.stopping = stopping;
        self
    }
}

/// Uniform samples on `[−amplitude, amplitude]` from a seeded ChaCha stream.
pub fn random_initial_guess(nt: usize, nx: usize, amplitude: f64, seed: u64) -> RealBlocks {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..nt * nx).map(|_| rng.random_range(-amplitude..=amplitude)).collect();
    RealBlocks::from_vec(nt, nx, data).expect("length matches by construction")
}

/// Waveform relaxation for a uniform θ-method system: each sweep solves
/// `P_α u^k = b + (P_α − A)u^{k−1}`, where `P_α − A` only holds the corner
/// blocks that couple the first step to the last state of the previous
/// iterate.
pub fn wr_solve(
    system: &AllAtOnceSystem,
    alpha: f64,
    cfg: &StationaryConfig,
    initial_guess: &RealBlocks,
    reference: Option<&RealBlocks>,
) -> Result<(RealBlocks, SolveReport)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ParadiagError::InvalidParameter(format!("waveform relaxation needs alpha in (0,1), got {alpha}")));
    }
    let pair = circulant_modify_theta(system, alpha)?;
    let solver = AlphaCirculantSolver::new(pair, &system.mass, &system.stiffness, cfg.options)?;
    let (c1, c2) = solver.pair().time_matrices();
    let nx = system.nx();
    let sweep = |prev: &RealBlocks| -> Result<RealBlocks> {
        let mut rhs = system.rhs.clone();
        for (corners, op) in [(c1.corners(), &system.mass), (c2.corners(), &system.stiffness)] {
            for &(i, j, w) in corners {
                let tail = op.mul_vec(prev.block(j));
                rhs.block_mut(i).iter_mut().zip(&tail).for_each(|(r, t)| *r += w * t);
            }
        }
        debug_assert_eq!(rhs.nx(), nx);
        solver.apply_inverse(&rhs)
    };
    iterate(system, cfg, initial_guess, reference, sweep)
}

/// Residual correction `P_α Δu^k = b − Au^k`, `u^{k+1} = u^k + Δu^k` for any
/// assembled system and a matching α-circulant pair.
pub fn stationary_solve(
    system: &AllAtOnceSystem,
    pair: &AlphaCirculantPair,
    cfg: &StationaryConfig,
    initial_guess: &RealBlocks,
    reference: Option<&RealBlocks>,
) -> Result<(RealBlocks, SolveReport)> {
    check_dim("stationary iteration (nt)", system.nt(), pair.nt())?;
    let solver = AlphaCirculantSolver::new(pair.clone(), &system.mass, &system.stiffness, cfg.options)?;
    let sweep = |prev: &RealBlocks| -> Result<RealBlocks> {
        let r = system.residual(prev)?;
        let mut next = solver.apply_inverse(&r)?;
        next.as_mut_slice().iter_mut().zip(prev.as_slice()).for_each(|(n, p)| *n += p);
        Ok(next)
    };
    iterate(system, cfg, initial_guess, reference, sweep)
}

fn iterate<F>(
    system: &AllAtOnceSystem,
    cfg: &StationaryConfig,
    initial_guess: &RealBlocks,
    reference: Option<&RealBlocks>,
    mut sweep: F,
) -> Result<(RealBlocks, SolveReport)>
where
    F: FnMut(&RealBlocks) -> Result<RealBlocks>,
{
    check_dim("initial guess (nt)", system.nt(), initial_guess.nt())?;
    check_dim("initial guess (nx)", system.nx(), initial_guess.nx())?;
    if let Some(r) = reference {
        check_dim("reference", system.rhs.len(), r.len())?;
    }
    let start = Instant::now();
    let b_norm = system.rhs.max_abs();
    let rel_residual = |u: &RealBlocks| -> Result<f64> {
        let r = system.residual(u)?.max_abs();
        Ok(if b_norm > 0.0 { r / b_norm } else { r })
    };
    let mut u = initial_guess.clone();
    let mut residuals = vec![rel_residual(&u)?];
    let mut increments = Vec::new();
    let mut errors = reference.map(|r| vec![u.max_abs_diff(r)]);
    let mut converged = false;
    for _ in 0..cfg.maxit {
        let next = sweep(&u)?;
        let inc = next.max_abs_diff(&u);
        u = next;
        increments.push(inc);
        residuals.push(rel_residual(&u)?);
        if let (Some(e), Some(r)) = (errors.as_mut(), reference) {
            e.push(u.max_abs_diff(r));
        }
        let measure = match cfg.stopping {
            StoppingRule::Increment => inc,
            StoppingRule::Residual => *residuals.last().unwrap(),
        };
        if measure <= cfg.tol {
            converged = true;
            break;
        }
        if !measure.is_finite() {
            break;
        }
    }
    let mut report = SolveReport {
        iterations: increments.len(),
        residual_history: residuals,
        error_history: errors,
        increment_history: Some(increments),
        wall_time: start.elapsed(),
        converged,
        status: if converged { "converged".into() } else { "maximum iterations reached".into() },
        ..SolveReport::default()
    };
    report.refresh_contraction();
    Ok((u, report))
}
