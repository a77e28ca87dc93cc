//! Restarted or full-memory GMRES with left preconditioning.
//!
//! The operator and preconditioner are supplied as closures over real slices,
//! so the caller decides how a matrix-vector product or a preconditioner solve
//! is carried out (dense, sparse, FFT-based, in parallel, ...).
//!
//! ```
//! use krylov::{gmres, KrylovConfig};
//!
//! let diag = [2.0, 4.0, 8.0];
//! let b = [2.0, 4.0, 8.0];
//! let cfg = KrylovConfig::new(1e-12, 10).unwrap();
//! let op = |x: &[f64]| -> Result<Vec<f64>, krylov::KrylovError> {
//!     Ok(x.iter().zip(diag).map(|(v, d)| v * d).collect())
//! };
//! let identity = |x: &[f64]| -> Result<Vec<f64>, krylov::KrylovError> { Ok(x.to_vec()) };
//! let (x, report) = gmres(op, identity, &b, &[0.0; 3], &cfg).unwrap();
//! assert!(report.converged);
//! assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-12));
//! ```

mod gmres;
mod report;

pub use gmres::{gmres, GmresStatus, KrylovConfig, KrylovError, StoppingNorm};
pub use report::{ratios as consecutive_ratios, SolveReport};
