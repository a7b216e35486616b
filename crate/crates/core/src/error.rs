//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any kineflow operation.
#[derive(Debug, Error)]
pub enum Error {
    /// A dimension argument was zero or otherwise unusable.
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    /// Inputs violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A computation produced non-finite values.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The requested method does not apply to the given input.
    #[error("invalid method: {0}")]
    InvalidMethod(String),

    /// An iterative solver failed to converge.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    /// Required optional data was absent.
    #[error("missing data: {0}")]
    MissingData(String),

    /// A form operation would exceed the ambient dimension.
    #[error("degree overflow: degree {degree} in dimension {dim}")]
    DegreeOverflow { degree: usize, dim: usize },

    /// Contraction of a degree-0 form.
    #[error("degree underflow: cannot lower the degree of a 0-form")]
    DegreeUnderflow,

    /// A least-squares design matrix was rank deficient.
    #[error("rank-deficient system: {0}")]
    RankDeficient(String),

    /// Every sample was below the speed floor.
    #[error("no motion: all samples below the speed floor")]
    NoMotion,

    /// Cluster count incompatible with the sample count.
    #[error("invalid k: {k} clusters requested for {samples} samples")]
    InvalidK { k: usize, samples: usize },

    /// Convex hull construction failed.
    #[error("degenerate hull: {0}")]
    DegenerateHull(String),

    /// Region matching found two indistinguishable candidates.
    #[error("ambiguous track at frame {frame}: candidate centroids {d1:.3} px and {d2:.3} px apart")]
    AmbiguousTrack { frame: usize, d1: f64, d2: f64 },

    /// Triangle vertices are collinear.
    #[error("collinear triangle: area {area:.3e} below threshold")]
    CollinearTriangle { area: f64 },

    /// A vertex coincides with the orthocenter (right triangle).
    #[error("infinite mass at vertex {vertex}: orthocenter coincides with it")]
    InfiniteMass { vertex: usize },

    /// Evaluation exactly at an unsoftened charge center.
    #[error("singularity at charge center {center}")]
    Singularity { center: usize },

    /// Point at or behind the camera plane.
    #[error("cheirality violation: camera-frame depth {depth:.3e}")]
    Cheirality { depth: f64 },

    /// Sequence generation lost visibility partway through.
    #[error("partial sequence: visibility lost at frame {frame}")]
    PartialSequence { frame: usize },

    /// Division by a zero scalar (stationary background).
    #[error("division by zero: {0}")]
    DivisionByZero(String),
}

pub type Result<T> = std::result::Result<T, Error>;
