use thiserror::Error;

/// Errors raised by the numerical layers and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is singular (smallest eigenvalue {min:.3e} below threshold {threshold:.3e})")]
    Singular { min: f64, threshold: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate map: {0}")]
    DegenerateMap(String),

    #[error("spectral gap error: {0}")]
    SpectralGap(String),

    #[error("limit did not converge by depth {depth}: last projective gap {gap:.3e}")]
    Convergence { depth: usize, gap: f64 },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("support error: {0}")]
    Support(String),

    #[error("imaginary residue {0:.3e} exceeds tolerance")]
    ImaginaryResidue(f64),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
