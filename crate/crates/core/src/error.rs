use num_complex::Complex64;
use thiserror::Error;

/// Failures surfaced by the solver stack.
#[derive(Debug, Error)]
pub enum RhpError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid branchpoints: {0}")]
    InvalidBranchpoints(String),
    #[error("point {z} lies on a branch cut")]
    CutContact { z: Complex64 },
    #[error("evaluation at the logarithmic singularity z = {z}")]
    Singularity { z: Complex64 },
    #[error("half-plane tag does not match z = {z}")]
    SideMismatch { z: Complex64 },
    #[error("contour construction failed: {0}")]
    Contour(String),
    #[error("placement violation: {0}")]
    Placement(String),
    #[error("quadrature did not converge (error estimate {error:.3e}, worst panel near {worst})")]
    Quadrature { error: f64, worst: Complex64 },
    #[error("singular linear system (coincident branchpoints?)")]
    SingularSystem,
    #[error("constant {name} has imaginary residue {residue:.3e}")]
    NonReal { name: String, residue: f64 },
    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    Divergence { iterations: usize, residual: f64 },
    #[error("near break: {0}")]
    NearBreak(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("malformed data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RhpError>;
