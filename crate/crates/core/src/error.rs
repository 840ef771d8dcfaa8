use thiserror::Error;

use crate::scalars::Field;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("field mismatch: {0:?} vs {1:?}")]
    FieldMismatch(Field, Field),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("matrix is not hermitian positive definite")]
    NotPositiveDefinite,
    #[error("linear map is singular")]
    SingularTransform,
    #[error("the origin is not an interior point of the body")]
    OriginNotInterior,
    #[error("operation not supported for body kind {0}")]
    UnsupportedKind(&'static str),
    #[error("projection volume unavailable for this body (needs an ellipsoid, or m = 1 with a unit-scalar invariant body exposing a support function)")]
    UnsupportedBodyForProjection,
    #[error("rejection sampler gave up after {0} consecutive rejections")]
    RejectionBudgetExceeded(u64),
    #[error("could not draw a full-rank frame after {0} attempts")]
    RetryExhausted(u32),
    #[error("transform is not unimodular: |det| = {0}")]
    NotUnimodular(f64),
    #[error("body is not invariant under unit scalars")]
    NotUnitScalarInvariant,
    #[error("polytope too large for facet enumeration ({0} candidate subsets)")]
    TooComplex(u128),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
