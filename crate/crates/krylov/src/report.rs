use std::time::Duration;

/// Convergence record shared by every iterative solver in the workspace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residuals, entry 0 being the initial one.
    pub residual_history: Vec<f64>,
    /// Unpreconditioned relative residuals when they were tracked.
    pub true_residual_history: Option<Vec<f64>>,
    /// Errors against a reference solution when one was supplied.
    pub error_history: Option<Vec<f64>>,
    /// Ratios of consecutive history entries (errors if present, else residuals).
    pub contraction_estimates: Vec<f64>,
    pub wall_time: Duration,
    pub converged: bool,
    /// Free-form status such as "breakdown" or "max iterations".
    pub status: String,
    /// Condition-number estimate of an eigenvector matrix, for direct solvers.
    pub cond_estimate: Option<f64>,
    /// Max-norm differences of successive iterates, for stationary iterations.
    pub increment_history: Option<Vec<f64>>,
    /// Seed of any random initial guess.
    pub seed: Option<u64>,
}

impl SolveReport {
    /// Recomputes `contraction_estimates` from the error history if present,
    /// otherwise from the residual history.
    pub fn refresh_contraction(&mut self) {
        let hist = self.error_history.as_ref().unwrap_or(&self.residual_history);
        self.contraction_estimates = ratios(hist);
    }
}

/// Ratios `h[k+1] / h[k]`; a zero denominator yields zero.
pub fn ratios(hist: &[f64]) -> Vec<f64> {
    hist.windows(2)
        .map(|w| if w[0] == 0.0 { 0.0 } else { w[1] / w[0] })
        .collect()
}
