use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("chart is not a centered graph: |f(0)| = {value:.3e}, |grad f(0)| = {gradient:.3e}")]
    NotCentered { value: f64, gradient: f64 },

    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("plane basis is not orthonormal (deviation {0:.3e})")]
    NotOrthonormal(f64),

    #[error("plane is not transversal to the tangent space: singular value {sigma:.3e} along tangent direction {direction:?}")]
    NotTransversal { sigma: f64, direction: Vec<f64> },

    #[error("no sign change bracketing the boundary along {direction:?} at scale {eps}")]
    NoBracket { direction: Vec<f64>, eps: f64 },

    #[error("scale {eps} exceeds the validity ceiling {ceiling:.4} of {manifold}")]
    AboveCeiling {
        manifold: String,
        eps: f64,
        ceiling: f64,
    },

    #[error("matrix is not symmetric (asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("leading perturbation coefficient must be nonzero")]
    ZeroLeadingCoefficient,

    #[error("fit design is rank deficient (condition number {0:.3e})")]
    RankDeficient(f64),

    #[error("invalid fit samples: {0}")]
    InvalidSamples(String),

    #[error("insufficient samples: need {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("rejection sampler collapsed: accepted {accepted} of {proposed} proposals")]
    RejectionCollapse { accepted: usize, proposed: usize },

    #[error("descriptor inversion requires a hypersurface, got codimension {0}")]
    NotHypersurface(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
