use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("parameters outside the regime of validity: {0}")]
    OutOfRegime(String),

    #[error("orthogonal polynomial breakdown at degree {degree}")]
    Breakdown { degree: usize },

    #[error(
        "quadrature failed to converge after {doublings} doublings (last change {last_change:e})"
    )]
    NonConvergence { doublings: u32, last_change: f64 },

    #[error("point lies on the band [a, b]")]
    BandPoint,

    #[error("point lies within the band-edge margin")]
    NearBandEdge,

    #[error("point lies in a margin between asymptotic regions")]
    RegionAmbiguous,

    #[error("point lies outside the disk around the critical point")]
    OutsideDisk,

    #[error("evaluation point is within {distance:e} of a lattice node")]
    NearPole { distance: f64 },

    #[error("abscissa outside the support of the semicircle law")]
    OutOfBand,

    #[error("window index {given} does not match the drift (expected {expected:?})")]
    WindowMismatch {
        given: usize,
        expected: Option<usize>,
    },

    #[error("rejection budget of {proposals} proposals exhausted")]
    RejectionBudgetExceeded { proposals: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
