//! Iterative solvers that invert a nearby α-circulant system each sweep,
//! either as a stationary iteration or as a Krylov preconditioner.

mod analysis;
mod newton;
mod parareal;
mod preconditioned;
mod stationary;

pub use analysis::{
    check_leapfrog_spectrum, contraction_bound, multistep_root_condition, polynomial_roots,
    predicted_leapfrog_spectrum, spectrum_probe, BoundScheme, ContractionBound, SpectrumCheck, MATCH_TOL,
    ROOT_CLUSTER_TOL, SPECTRUM_PROBE_CAP, UNIT_TOL,
};
pub use newton::{
    nonlinear_newton_solve, sequential_nonlinear_theta, CubicDecay, JacobianAveraging, LinearField, NewtonConfig,
    NonlinearField, NonlinearThetaProblem, DIVERGENCE_STREAK,
};
pub use parareal::{
    classical_parareal, fine_propagate, pint_cgc_parareal, Forcing, PararealConfig, Propagator, PropagatorSpec,
    RkKind, Tableau,
};
pub use preconditioned::{
    optctrl_eigenvector_matrix, optctrl_solve, wave_gmres_solve, OptCtrlPreconditioner, OptCtrlSolution,
};
pub use stationary::{random_initial_guess, stationary_solve, wr_solve, StationaryConfig, StoppingRule};
