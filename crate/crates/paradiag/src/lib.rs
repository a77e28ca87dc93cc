//! Diagonalization-based parallel-in-time solvers.
//!
//! An all-at-once system `(B₁⊗M + B₂⊗K)u = b` couples every time step of a
//! one-step or two-step scheme. Two families of solvers are provided:
//!
//! * direct solvers that diagonalize `B₂⁻¹B₁` itself, on geometric grids or
//!   for the hybrid midpoint/backward-Euler scheme ([`paradiag_one`]);
//! * iterative solvers that invert an α-circulant neighbour `P_α` by FFT
//!   in time plus independent shifted spatial solves ([`paradiag_two`]).
//!
//! ```
//! use paradiag::problems::ade_1d_periodic;
//! use paradiag::time_disc::{assemble_theta_system, sequential_theta, TimeGrid};
//! use paradiag::paradiag_two::{wr_solve, StationaryConfig};
//! use paradiag::RealBlocks;
//!
//! let a = ade_1d_periodic(1e-2, 32).unwrap();
//! let grid = TimeGrid::uniform(16, 1.0 / 16.0).unwrap();
//! let u0: Vec<f64> = (0..32).map(|i| (i as f64 * 0.2).sin()).collect();
//! let system = assemble_theta_system(0.5, &grid, &a, &u0, |_| vec![0.0; 32]).unwrap();
//! let cfg = StationaryConfig::new(1e-12, 20).unwrap();
//! let (u, report) = wr_solve(&system, 1e-2, &cfg, &RealBlocks::zeros(16, 32), None).unwrap();
//! let reference = sequential_theta(0.5, &grid, &a, &u0, |_| vec![0.0; 32]).unwrap();
//! assert!(report.converged);
//! assert!(u.max_abs_diff(&reference) < 1e-10);
//! ```

pub mod block;
pub mod error;
pub mod fft;
pub mod linalg;
pub mod paradiag_one;
pub mod paradiag_two;
pub mod problems;
pub mod shift;
pub mod space;
pub mod spectral;
pub mod time_disc;
pub mod time_matrix;

pub use block::{BlockVector, ComplexBlocks, RealBlocks};
pub use error::{ParadiagError, Result};
pub use krylov::{KrylovConfig, SolveReport, StoppingNorm};
pub use space::SpaceOperator;
pub use spectral::{AlphaCirculantPair, AlphaCirculantSolver, SolverOptions};
pub use time_disc::{AllAtOnceSystem, Scheme, TimeGrid};
