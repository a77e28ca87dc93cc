use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParadiagError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension { context: &'static str, expected: usize, got: usize },
    #[error("singular shifted system at time index {index}")]
    SingularShift { index: usize },
    #[error("imaginary residue {ratio:.3e} (relative) exceeds tolerance; stencils are likely inconsistent")]
    ImaginaryResidue { ratio: f64 },
    #[error("root finding failed: {0}")]
    RootFinding(String),
    #[error("nonlinear iteration diverged after {iterations} iterations")]
    Divergence { iterations: usize },
    #[error("problem size {size} exceeds the cap {cap} for {context}")]
    TooLarge { context: &'static str, size: usize, cap: usize },
    #[error(transparent)]
    Krylov(#[from] krylov::KrylovError),
}

pub type Result<T> = std::result::Result<T, ParadiagError>;

pub(crate) fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(ParadiagError::Dimension { context, expected, got })
    }
}
