use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures of the pointwise geometry pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the validity box")]
    OutsideBox { point: [f64; 4] },
    #[error("metric at {point:?} is not Lorentzian ({negative} negative eigenvalues)")]
    NonLorentzian { point: [f64; 4], negative: usize },
    #[error("metric at {point:?} is not symmetric (max deviation {deviation:e})")]
    AsymmetricMetric { point: [f64; 4], deviation: f64 },
    #[error("metric at {point:?} is singular")]
    SingularMetric { point: [f64; 4] },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("orthonormal frame construction failed: pivot {pivot:e} below floor at basis vector {index}")]
    FrameConstruction { index: usize, pivot: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
}
