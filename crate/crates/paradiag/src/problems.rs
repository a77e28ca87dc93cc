//! Model problems: finite-difference space operators, initial data, forcing
//! terms and exact solutions.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{ParadiagError, Result};
use crate::space::SpaceOperator;

/// `ν/Δx²·(−1, 2, −1) + 1/(2Δx)·(−1, 0, 1)` on the periodic grid
/// `xᵢ = −1 + iΔx`, `Δx = 2/nx`, discretizing `−νu_xx + u_x`.
pub fn ade_1d_periodic(nu: f64, nx: usize) -> Result<SpaceOperator> {
    if !(nu > 0.0) {
        return Err(ParadiagError::InvalidParameter(format!("nu must be positive, got {nu}")));
    }
    periodic_stencil(nu, nx, 2.0)
}

fn periodic_stencil(nu: f64, nx: usize, length: f64) -> Result<SpaceOperator> {
    if nx < 3 {
        return Err(ParadiagError::InvalidParameter(format!("periodic grid needs at least 3 nodes, got {nx}")));
    }
    let dx = length / nx as f64;
    let diff = nu / (dx * dx);
    let adv = 1.0 / (2.0 * dx);
    let mut t = Vec::with_capacity(3 * nx);
    for i in 0..nx {
        let left = (i + nx - 1) % nx;
        let right = (i + 1) % nx;
        t.push((i, i, 2.0 * diff));
        t.push((i, left, -diff - adv));
        t.push((i, right, -diff + adv));
    }
    SpaceOperator::from_triplets(nx, &t)
}

/// 2D periodic advection-diffusion `−νΔ_h + ∂_x + ∂_y` on `(0,1)²` with
/// `n` nodes per direction (index `k = iy·n + ix`), assembled as the
/// Kronecker sum `I⊗A₁ + A₁⊗I`.
pub fn ade_2d_periodic(nu: f64, n: usize) -> Result<SpaceOperator> {
    if !(nu > 0.0) {
        return Err(ParadiagError::InvalidParameter(format!("nu must be positive, got {nu}")));
    }
    let one_d = periodic_stencil(nu, n, 1.0)?;
    kronecker_sum(&one_d)
}

fn kronecker_sum(a: &SpaceOperator) -> Result<SpaceOperator> {
    let n = a.nx();
    let mut t = Vec::with_capacity(2 * n * a.nnz());
    for (i, j, v) in a.triplets() {
        for k in 0..n {
            t.push((k * n + i, k * n + j, v));
            t.push((i * n + k, j * n + k, v));
        }
    }
    SpaceOperator::from_triplets(n * n, &t)
}

/// Five-point `−Δ_h` on the unit square with homogeneous Dirichlet data,
/// `m` interior nodes per direction, `h = 1/(m+1)`, lexicographic order.
pub fn laplacian_2d_dirichlet(m: usize) -> Result<SpaceOperator> {
    if m == 0 {
        return Err(ParadiagError::InvalidParameter("need at least one interior node".into()));
    }
    let h = 1.0 / (m + 1) as f64;
    let s = 1.0 / (h * h);
    let mut t = Vec::with_capacity(5 * m * m);
    for iy in 0..m {
        for ix in 0..m {
            let k = iy * m + ix;
            t.push((k, k, 4.0 * s));
            if ix > 0 {
                t.push((k, k - 1, -s));
            }
            if ix + 1 < m {
                t.push((k, k + 1, -s));
            }
            if iy > 0 {
                t.push((k, k - m, -s));
            }
            if iy + 1 < m {
                t.push((k, k + m, -s));
            }
        }
    }
    SpaceOperator::from_triplets(m * m, &t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

/// Tensor grid metadata. `points` are the 1D node coordinates; in 2D the
/// node `k = iy·n + ix` sits at `(points[ix], points[iy])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub dx: f64,
    pub domain: (f64, f64),
    pub boundary: Boundary,
    pub points: Vec<f64>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.points.len().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Samples `f(x, y)` at every node (`y` is 0 in 1D).
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        match self.dim {
            1 => self.points.iter().map(|&x| f(x, 0.0)).collect(),
            _ => self.points.iter().flat_map(|&y| self.points.iter().map(move |&x| (x, y))).map(|(x, y)| f(x, y)).collect(),
        }
    }

    /// Discrete `L²` norm `(h^d Σ vᵢ²)^{1/2}`.
    pub fn l2_norm(&self, v: &[f64]) -> f64 {
        (self.dx.powi(self.dim as i32) * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
    }
}

/// A space field depending on time.
pub type Field = Arc<dyn Fn(&Grid, f64) -> Vec<f64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseId {
    Ade1d,
    Ade2d,
    Wave2dHybrid,
    Wave2dLeapfrog,
    OptCtrl2d,
}

impl std::str::FromStr for CaseId {
    type Err = ParadiagError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ade1d" => Ok(Self::Ade1d),
            "ade2d" => Ok(Self::Ade2d),
            "wave2d_hybrid" => Ok(Self::Wave2dHybrid),
            "wave2d_leapfrog" => Ok(Self::Wave2dLeapfrog),
            "optctrl2d" => Ok(Self::OptCtrl2d),
            other => Err(ParadiagError::InvalidParameter(format!("unknown case id '{other}'"))),
        }
    }
}

/// Parameters shared by the model cases. `cells` is the number of mesh
/// intervals per direction: periodic grids have `cells` nodes, Dirichlet
/// grids `cells − 1` interior nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub nu: f64,
    pub cells: usize,
    pub t_final: f64,
    pub gamma: f64,
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self { nu: 1e-2, cells: 32, t_final: 2.0, gamma: 1e-2 }
    }
}

#[derive(Clone)]
pub struct ProblemInstance {
    pub case: CaseId,
    pub operator: SpaceOperator,
    pub grid: Grid,
    pub t_final: f64,
    pub u0: Vec<f64>,
    /// Initial velocity for second-order problems.
    pub u1: Option<Vec<f64>>,
    pub forcing: Field,
    pub exact: Option<Field>,
    /// Optimal control: source term of the adjoint equation.
    pub adjoint_forcing: Option<Field>,
    /// Optimal control: exact adjoint state.
    pub adjoint_exact: Option<Field>,
    pub gamma: Option<f64>,
}

impl std::fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("case", &self.case)
            .field("nx", &self.operator.nx())
            .field("grid", &self.grid)
            .field("t_final", &self.t_final)
            .finish_non_exhaustive()
    }
}

impl ProblemInstance {
    pub fn nx(&self) -> usize {
        self.operator.nx()
    }

    pub fn forcing_at(&self, t: f64) -> Vec<f64> {
        (self.forcing)(&self.grid, t)
    }

    pub fn exact_at(&self, t: f64) -> Option<Vec<f64>> {
        self.exact.as_ref().map(|e| e(&self.grid, t))
    }

    /// `maxₙ ‖Uₙ − u(tₙ)‖_{L²}` over the given time levels, if an exact
    /// solution is known.
    pub fn max_l2_error(&self, states: &[&[f64]], times: &[f64]) -> Option<f64> {
        let exact = self.exact.as_ref()?;
        let mut worst: f64 = 0.0;
        for (u, &t) in states.iter().zip(times) {
            let e: Vec<f64> = u.iter().zip(exact(&self.grid, t)).map(|(a, b)| a - b).collect();
            worst = worst.max(self.grid.l2_norm(&e));
        }
        Some(worst)
    }
}

fn zero_field() -> Field {
    Arc::new(|g: &Grid, _t| vec![0.0; g.len()])
}

fn field(f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Field {
    Arc::new(move |g: &Grid, t| g.sample(|x, y| f(x, y, t)))
}

fn periodic_grid(dim: usize, cells: usize, domain: (f64, f64)) -> Grid {
    let dx = (domain.1 - domain.0) / cells as f64;
    Grid { dim, dx, domain, boundary: Boundary::Periodic, points: (0..cells).map(|i| domain.0 + i as f64 * dx).collect() }
}

fn dirichlet_grid(cells: usize) -> Grid {
    let dx = 1.0 / cells as f64;
    Grid { dim: 2, dx, domain: (0.0, 1.0), boundary: Boundary::Dirichlet, points: (1..cells).map(|i| i as f64 * dx).collect() }
}

/// Assembles one of the model cases.
pub fn make_problem(case: CaseId, params: &ProblemParams) -> Result<ProblemInstance> {
    let ProblemParams { nu, cells, t_final, gamma } = *params;
    if !(t_final > 0.0) {
        return Err(ParadiagError::InvalidParameter(format!("final time must be positive, got {t_final}")));
    }
    let base = |operator: SpaceOperator, grid: Grid, u0: Vec<f64>| ProblemInstance {
        case,
        operator,
        grid,
        t_final,
        u0,
        u1: None,
        forcing: zero_field(),
        exact: None,
        adjoint_forcing: None,
        adjoint_exact: None,
        gamma: None,
    };
    let bubble = |x: f64, y: f64| (PI * x).sin() * (PI * y).sin();
    match case {
        CaseId::Ade1d => {
            let grid = periodic_grid(1, cells, (-1.0, 1.0));
            let u0 = grid.sample(|x, _| (-30.0 * x * x).exp());
            Ok(base(ade_1d_periodic(nu, cells)?, grid, u0))
        }
        CaseId::Ade2d => {
            let grid = periodic_grid(2, cells, (0.0, 1.0));
            let u0 = grid.sample(|x, y| (-20.0 * ((x - 0.5).powi(2) + (y - 0.5).powi(2))).exp());
            Ok(base(ade_2d_periodic(nu, cells)?, grid, u0))
        }
        CaseId::Wave2dHybrid => {
            check_cells(cells)?;
            let grid = dirichlet_grid(cells);
            let poly = |x: f64, y: f64| x * (x - 1.0) * y * (y - 1.0);
            let mut p = base(laplacian_2d_dirichlet(cells - 1)?, grid.clone(), vec![0.0; grid.len()]);
            p.u1 = Some(grid.sample(|x, y| 2.0 * PI * poly(x, y)));
            p.forcing = field(move |x, y, t| {
                let s = (2.0 * PI * t).sin();
                -4.0 * PI * PI * poly(x, y) * s - 2.0 * s * (x * (x - 1.0) + y * (y - 1.0))
            });
            p.exact = Some(field(move |x, y, t| poly(x, y) * (2.0 * PI * t).sin()));
            Ok(p)
        }
        CaseId::Wave2dLeapfrog => {
            check_cells(cells)?;
            let grid = dirichlet_grid(cells);
            let s = grid.sample(bubble);
            let mut p = base(laplacian_2d_dirichlet(cells - 1)?, grid, s.clone());
            p.u1 = Some(s);
            p.forcing = field(move |x, y, t| (1.0 + 2.0 * PI * PI) * bubble(x, y) * t.exp());
            p.exact = Some(field(move |x, y, t| bubble(x, y) * t.exp()));
            Ok(p)
        }
        CaseId::OptCtrl2d => {
            check_cells(cells)?;
            if !(gamma > 0.0) {
                return Err(ParadiagError::InvalidParameter(format!("gamma must be positive, got {gamma}")));
            }
            let grid = dirichlet_grid(cells);
            let s = grid.sample(bubble);
            let mut p = base(laplacian_2d_dirichlet(cells - 1)?, grid, s.clone());
            p.u1 = Some(s);
            let big_t = t_final;
            p.forcing = field(move |x, y, t| {
                ((1.0 + 2.0 * PI * PI) * t.exp() - (t - big_t).powi(2) / gamma) * bubble(x, y)
            });
            p.adjoint_forcing = Some(field(move |x, y, t| {
                (t.exp() + 2.0 + 2.0 * PI * PI * (t - big_t).powi(2)) * bubble(x, y)
            }));
            p.exact = Some(field(move |x, y, t| bubble(x, y) * t.exp()));
            p.adjoint_exact = Some(field(move |x, y, t| (t - big_t).powi(2) * bubble(x, y)));
            p.gamma = Some(gamma);
            Ok(p)
        }
    }
}

fn check_cells(cells: usize) -> Result<()> {
    if cells < 2 {
        return Err(ParadiagError::InvalidParameter(format!("need at least 2 cells per direction, got {cells}")));
    }
    Ok(())
}

/// Three-point `−d²/dx²` on `(0,1)` with homogeneous Dirichlet data and `m`
/// interior nodes.
pub fn laplacian_1d_dirichlet(m: usize) -> Result<SpaceOperator> {
    if m == 0 {
        return Err(ParadiagError::InvalidParameter("need at least one interior node".into()));
    }
    let h = 1.0 / (m + 1) as f64;
    let s = 1.0 / (h * h);
    let mut t = Vec::with_capacity(3 * m);
    for i in 0..m {
        t.push((i, i, 2.0 * s));
        if i > 0 {
            t.push((i, i - 1, -s));
        }
        if i + 1 < m {
            t.push((i, i + 1, -s));
        }
    }
    SpaceOperator::from_triplets(m, &t)
}
