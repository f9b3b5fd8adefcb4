use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A model or scenario parameter violates its invariant.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("array length {found} does not match grid node count {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("point {coord:?} lies outside the grid bounding box")]
    OutOfBounds { coord: Vec<f64> },

    #[error("grids are not compatible: {0}")]
    GridMismatch(String),

    #[error("non-finite value encountered while assembling element {element}")]
    NonFinite { element: usize },

    #[error("explicit time step {dt} exceeds the stability bound {bound}")]
    UnstableTimeStep { dt: f64, bound: f64 },

    #[error("fixed-point iteration did not converge in {} iterations (last update {:e})", .history.len(), .history.last().copied().unwrap_or(f64::NAN))]
    NoConvergence { history: Vec<f64> },

    #[error("no phi = 0 crossing along the tracking ray")]
    NoInterface,

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
