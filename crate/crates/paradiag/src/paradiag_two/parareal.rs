//! Implicit Runge–Kutta propagators and two parareal variants: the classical
//! sequential coarse sweep and the α-circulant coarse-grid correction.

use std::time::Instant;

use krylov::SolveReport;
use rayon::prelude::*;

use crate::block::RealBlocks;
use crate::error::{check_dim, ParadiagError, Result};
use crate::linalg::SparseRealLu;
use crate::paradiag_one::Trajectory;
use crate::problems::ProblemInstance;
use crate::space::SpaceOperator;
use crate::spectral::{AlphaCirculantPair, AlphaCirculantSolver, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RkKind {
    BackwardEuler,
    Sdirk2,
    RadauIIA3,
    LobattoIIIC4,
}

impl std::str::FromStr for RkKind {
    type Err = ParadiagError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "backward_euler" | "be" => Ok(Self::BackwardEuler),
            "sdirk2" => Ok(Self::Sdirk2),
            "radau_iia3" => Ok(Self::RadauIIA3),
            "lobatto_iiic4" => Ok(Self::LobattoIIIC4),
            other => Err(ParadiagError::InvalidParameter(format!("unknown propagator '{other}'"))),
        }
    }
}

impl std::fmt::Display for RkKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::BackwardEuler => "backward_euler",
            Self::Sdirk2 => "sdirk2",
            Self::RadauIIA3 => "radau_iia3",
            Self::LobattoIIIC4 => "lobatto_iiic4",
        })
    }
}

/// Butcher coefficients `(A, b, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tableau {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl Tableau {
    pub fn of(kind: RkKind) -> Self {
        let (a, b) = match kind {
            RkKind::BackwardEuler => (vec![vec![1.0]], vec![1.0]),
            RkKind::Sdirk2 => {
                let g = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
                (vec![vec![g, 0.0], vec![1.0 - g, g]], vec![1.0 - g, g])
            }
            RkKind::RadauIIA3 => (vec![vec![5.0 / 12.0, -1.0 / 12.0], vec![0.75, 0.25]], vec![0.75, 0.25]),
            RkKind::LobattoIIIC4 => (
                vec![
                    vec![1.0 / 6.0, -1.0 / 3.0, 1.0 / 6.0],
                    vec![1.0 / 6.0, 5.0 / 12.0, -1.0 / 12.0],
                    vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
                ],
                vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
            ),
        };
        let c = a.iter().map(|row| row.iter().sum()).collect();
        Self { a, b, c }
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }
}

/// A propagator over `substeps` steps of size `dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorSpec {
    pub kind: RkKind,
    pub dt: f64,
    pub substeps: usize,
}

impl PropagatorSpec {
    pub fn new(kind: RkKind, dt: f64, substeps: usize) -> Result<Self> {
        if !(dt > 0.0) || substeps == 0 {
            return Err(ParadiagError::InvalidParameter(format!(
                "propagator needs dt > 0 and substeps >= 1, got dt={dt}, substeps={substeps}"
            )));
        }
        Ok(Self { kind, dt, substeps })
    }

    /// Time covered by one application.
    pub fn span(&self) -> f64 {
        self.dt * self.substeps as f64
    }
}

/// Forcing `f(t)` of `u' + Au = f`.
pub type Forcing<'a> = &'a (dyn Fn(f64) -> Vec<f64> + Sync);

/// Implicit RK stepper for `u' + Au = f` with a factored stage matrix
/// `I + Δt·(A_rk ⊗ A)`.
#[derive(Debug)]
pub struct Propagator {
    spec: PropagatorSpec,
    tableau: Tableau,
    a: SpaceOperator,
    stage_lu: SparseRealLu,
}

impl Propagator {
    pub fn new(spec: PropagatorSpec, a: &SpaceOperator) -> Result<Self> {
        let tableau = Tableau::of(spec.kind);
        let (s, nx) = (tableau.stages(), a.nx());
        let mut t = Vec::new();
        for i in 0..s {
            for k in 0..nx {
                t.push((i * nx + k, i * nx + k, 1.0));
            }
            for j in 0..s {
                let w = spec.dt * tableau.a[i][j];
                if w != 0.0 {
                    t.extend(a.triplets().map(|(r, c, v)| (i * nx + r, j * nx + c, w * v)));
                }
            }
        }
        let stage_lu = SparseRealLu::new(s * nx, &t)?;
        Ok(Self { spec, tableau, a: a.clone(), stage_lu })
    }

    pub fn spec(&self) -> &PropagatorSpec {
        &self.spec
    }

    /// One step from `t` with stage slopes `K = −A(u + Δt Σ a_ij K_j) + f(t + c_i Δt)`.
    pub fn step(&self, u: &[f64], t: f64, forcing: Option<Forcing<'_>>) -> Result<Vec<f64>> {
        let nx = self.a.nx();
        check_dim("propagator state", nx, u.len())?;
        let au = self.a.mul_vec(u);
        let s = self.tableau.stages();
        let mut rhs = vec![0.0; s * nx];
        for i in 0..s {
            let block = &mut rhs[i * nx..(i + 1) * nx];
            block.iter_mut().zip(&au).for_each(|(r, v)| *r = -v);
            if let Some(f) = forcing {
                let fv = f(t + self.tableau.c[i] * self.spec.dt);
                check_dim("propagator forcing", nx, fv.len())?;
                block.iter_mut().zip(&fv).for_each(|(r, v)| *r += v);
            }
        }
        self.stage_lu.solve_in_place(&mut rhs)?;
        let mut out = u.to_vec();
        for (i, &bi) in self.tableau.b.iter().enumerate() {
            let w = self.spec.dt * bi;
            out.iter_mut().zip(&rhs[i * nx..(i + 1) * nx]).for_each(|(o, k)| *o += w * k);
        }
        Ok(out)
    }

    /// `substeps` steps starting at `t`.
    pub fn propagate(&self, u: &[f64], t: f64, forcing: Option<Forcing<'_>>) -> Result<Vec<f64>> {
        let mut cur = u.to_vec();
        for j in 0..self.spec.substeps {
            cur = self.step(&cur, t + j as f64 * self.spec.dt, forcing)?;
        }
        Ok(cur)
    }
}

/// `n_steps` homogeneous steps of size `spec.dt`.
pub fn fine_propagate(spec: &PropagatorSpec, a: &SpaceOperator, u: &[f64], n_steps: usize) -> Result<Vec<f64>> {
    let prop = Propagator::new(PropagatorSpec { substeps: 1, ..*spec }, a)?;
    let mut cur = u.to_vec();
    for n in 0..n_steps {
        cur = prop.step(&cur, n as f64 * spec.dt, None)?;
    }
    Ok(cur)
}

/// Shared parareal settings. The coarse and fine propagators must span the
/// same slice length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PararealConfig {
    pub coarse: PropagatorSpec,
    pub fine: PropagatorSpec,
    pub slices: usize,
    pub tol: f64,
    pub maxit: usize,
}

impl PararealConfig {
    fn validate(&self) -> Result<f64> {
        let dt_coarse = self.coarse.span();
        if (dt_coarse - self.fine.span()).abs() > 1e-12 * dt_coarse {
            return Err(ParadiagError::InvalidParameter(format!(
                "coarse span {dt_coarse} differs from fine span {}",
                self.fine.span()
            )));
        }
        if self.slices == 0 || !(self.tol > 0.0) || self.maxit == 0 {
            return Err(ParadiagError::InvalidParameter("need slices, maxit >= 1 and tol > 0".into()));
        }
        Ok(dt_coarse)
    }
}

struct Setup<'a> {
    fine: Propagator,
    forcing: Box<dyn Fn(f64) -> Vec<f64> + Sync + 'a>,
    reference: Vec<Vec<f64>>,
    dt_coarse: f64,
}

impl<'a> Setup<'a> {
    fn new(problem: &'a ProblemInstance, cfg: &PararealConfig, initial: &RealBlocks) -> Result<Self> {
        let dt_coarse = cfg.validate()?;
        check_dim("parareal initial guess (slices)", cfg.slices, initial.nt())?;
        check_dim("parareal initial guess (nx)", problem.nx(), initial.nx())?;
        let fine = Propagator::new(cfg.fine, &problem.operator)?;
        let forcing: Box<dyn Fn(f64) -> Vec<f64> + Sync + 'a> = Box::new(move |t| problem.forcing_at(t));
        let mut reference = vec![problem.u0.clone()];
        for n in 0..cfg.slices {
            let next = fine.propagate(&reference[n], n as f64 * dt_coarse, Some(&*forcing))?;
            reference.push(next);
        }
        Ok(Self { fine, forcing, reference, dt_coarse })
    }

    /// `F(U_n)` for every slice, in parallel.
    fn fine_sweep(&self, states: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        states[..states.len() - 1]
            .par_iter()
            .enumerate()
            .map(|(n, u)| self.fine.propagate(u, n as f64 * self.dt_coarse, Some(&*self.forcing)))
            .collect()
    }

    fn error(&self, states: &[Vec<f64>]) -> f64 {
        states
            .iter()
            .zip(&self.reference)
            .flat_map(|(u, r)| u.iter().zip(r).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }

    fn trajectory(&self, states: Vec<Vec<f64>>) -> Trajectory {
        let times = (0..states.len()).map(|n| n as f64 * self.dt_coarse).collect();
        Trajectory { times, states }
    }
}

fn states_from(u0: &[f64], initial: &RealBlocks) -> Vec<Vec<f64>> {
    std::iter::once(u0.to_vec()).chain(initial.blocks().map(<[f64]>::to_vec)).collect()
}

fn finish(
    errors: Vec<f64>,
    converged: bool,
    start: Instant,
) -> SolveReport {
    let mut report = SolveReport {
        iterations: errors.len() - 1,
        residual_history: errors.clone(),
        error_history: Some(errors),
        wall_time: start.elapsed(),
        converged,
        status: if converged { "converged".into() } else { "maximum iterations reached".into() },
        ..SolveReport::default()
    };
    report.refresh_contraction();
    report
}

/// Classical parareal `U^k_{n+1} = G(U^k_n) + F(U^{k−1}_n) − G(U^{k−1}_n)`,
/// stopped when the max-norm error against the sequential fine solution is
/// at most `tol`. `initial` holds `U^0_1 … U^0_{slices}`.
pub fn classical_parareal(
    problem: &ProblemInstance,
    cfg: &PararealConfig,
    initial: &RealBlocks,
) -> Result<(Trajectory, SolveReport)> {
    let start = Instant::now();
    let setup = Setup::new(problem, cfg, initial)?;
    let coarse = Propagator::new(cfg.coarse, &problem.operator)?;
    let g = |u: &[f64], n: usize| coarse.propagate(u, n as f64 * setup.dt_coarse, Some(&*setup.forcing));
    let mut states = states_from(&problem.u0, initial);
    let mut errors = vec![setup.error(&states)];
    let mut converged = false;
    let mut g_old: Vec<Vec<f64>> = states[..cfg.slices].par_iter().enumerate().map(|(n, u)| g(u, n)).collect::<Result<_>>()?;
    for _ in 0..cfg.maxit {
        let f_old = setup.fine_sweep(&states)?;
        for n in 0..cfg.slices {
            let g_new = g(&states[n], n)?;
            states[n + 1] = g_new.iter().zip(&f_old[n]).zip(&g_old[n]).map(|((gn, f), go)| gn + f - go).collect();
            g_old[n] = g_new;
        }
        errors.push(setup.error(&states));
        if *errors.last().unwrap() <= cfg.tol {
            converged = true;
            break;
        }
    }
    Ok((setup.trajectory(states), finish(errors, converged, start)))
}

/// Parareal whose coarse sweep is replaced by an all-at-once backward-Euler
/// solve with an α head-tail coupling: with `ΔT` the slice length,
///
/// ```text
/// (I/ΔT + A)U^k_{n+1} − U^k_n/ΔT = (I/ΔT + A)F(U^{k−1}_n) − U^{k−1}_n/ΔT,
/// U^k_0 = u₀ + α(U^k_N − U^{k−1}_N).
/// ```
///
/// The coarse propagator in `cfg` must be backward Euler.
pub fn pint_cgc_parareal(
    problem: &ProblemInstance,
    cfg: &PararealConfig,
    alpha: f64,
    initial: &RealBlocks,
) -> Result<(Trajectory, SolveReport)> {
    if cfg.coarse.kind != RkKind::BackwardEuler || cfg.coarse.substeps != 1 {
        return Err(ParadiagError::InvalidParameter("the coarse-grid correction uses one backward-Euler step".into()));
    }
    let start = Instant::now();
    let setup = Setup::new(problem, cfg, initial)?;
    let (nt, nx, dt) = (cfg.slices, problem.nx(), setup.dt_coarse);
    let mut c1 = vec![0.0; nt];
    let mut c2 = vec![0.0; nt];
    c1[0] = 1.0 / dt;
    c2[0] = 1.0;
    if nt > 1 {
        c1[1] = -1.0 / dt;
    } else {
        c1[0] -= alpha / dt;
    }
    let pair = AlphaCirculantPair::new(c1, c2, alpha)?;
    let id = SpaceOperator::identity(nx);
    let solver = AlphaCirculantSolver::new(pair, &id, &problem.operator, SolverOptions::default())?;
    let mut states = states_from(&problem.u0, initial);
    let mut errors = vec![setup.error(&states)];
    let mut converged = false;
    for _ in 0..cfg.maxit {
        let f_old = setup.fine_sweep(&states)?;
        let mut rhs = RealBlocks::zeros(nt, nx);
        rhs.as_mut_slice().par_chunks_mut(nx).enumerate().for_each(|(n, r)| {
            let af = problem.operator.mul_vec(&f_old[n]);
            let prev = if n == 0 { &states[nt] } else { &states[n] };
            let w = if n == 0 { alpha } else { 1.0 };
            for i in 0..nx {
                r[i] = f_old[n][i] / dt + af[i] - w * prev[i] / dt;
            }
        });
        let next = solver.apply_inverse(&rhs)?;
        for (n, b) in next.blocks().enumerate() {
            states[n + 1].copy_from_slice(b);
        }
        errors.push(setup.error(&states));
        if *errors.last().unwrap() <= cfg.tol {
            converged = true;
            break;
        }
    }
    Ok((setup.trajectory(states), finish(errors, converged, start)))
}
