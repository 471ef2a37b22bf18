use thiserror::Error;

/// Errors raised by the lattice laboratory.
#[derive(Debug, Error)]
pub enum LatlabError {
    #[error("degenerate basis: |det| = {det:e} is below {threshold:e}")]
    DegenerateBasis { det: f64, threshold: f64 },

    #[error("quadratic pair requires alpha != alpha' (both are {0})")]
    EqualRoots(f64),

    #[error("enumeration would visit {predicted:e} coefficient vectors, cap is {cap:e}")]
    BallTooLarge { predicted: f64, cap: f64 },

    #[error("no nonzero lattice vector in the ball of radius {0}")]
    EmptyBall(f64),

    #[error("lattice vector {coords:?} has Num = 0; the spectral sums are undefined (use the zsquare analysis for Z^2-like lattices)")]
    NumZero { coords: [f64; 2] },

    #[error("lattice is not unimodular: covol = {0}")]
    NotUnimodular(f64),

    #[error("unsupported dimension {0}")]
    UnsupportedDim(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("bad density: {0}")]
    BadDensity(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("bad configuration: {0}")]
    BadConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = LatlabError> = std::result::Result<T, E>;
