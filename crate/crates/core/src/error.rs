use thiserror::Error;

/// Broad failure category, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numerical,
    Hypothesis,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Lévy spec: {0}")]
    InvalidSpec(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("λ = {lambda} lies outside the Laplace domain ({lower}, {upper})")]
    OutsideDomain { lambda: f64, lower: f64, upper: f64 },

    #[error("ψ′ is negative on the whole of (0, θ⁺): the minimum of ψ sits at the boundary")]
    MinimumAtBoundary,

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("grid misalignment: {0}")]
    GridMisaligned(String),

    #[error("grid too coarse for skeleton rate q = {q}: refine the step below {max_step}")]
    RefineGrid { q: f64, max_step: f64 },

    #[error("sandwich bound violated by {excess:e} at the {side} side")]
    SandwichViolation { side: &'static str, excess: f64 },

    #[error("perpetuity tail did not stabilise before horizon {horizon}")]
    TailUnstable { horizon: f64 },

    #[error("hypothesis not met: {0}")]
    Hypothesis(String),

    #[error("unclassified: {0}")]
    Unclassified(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidSpec(_)
            | Error::InvalidInput(_)
            | Error::GridMisaligned(_)
            | Error::OutsideDomain { .. } => ErrorKind::Config,
            Error::MinimumAtBoundary
            | Error::Hypothesis(_)
            | Error::Unclassified(_) => ErrorKind::Hypothesis,
            Error::Quadrature(_)
            | Error::RefineGrid { .. }
            | Error::SandwichViolation { .. }
            | Error::TailUnstable { .. }
            | Error::InsufficientData(_)
            | Error::Numerical(_) => ErrorKind::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
