//! Convex bodies in `F^n` for `F` in {R, C, H}, Dieudonne determinants, and
//! Monte Carlo estimators for random-subspace functionals.

pub mod bodies;
pub mod error;
pub mod functionals;
pub mod mc;
pub mod ncla;
pub mod quermass;
pub mod randgeom;
pub mod scalars;
pub mod symmetrize;

pub use bodies::{Body, BodyKind, ConvexBody, Ellipsoid};
pub use error::{Error, Result};
pub use mc::{Estimate, McConfig, McRng};
pub use ncla::{det_abs_tuple, determinant_suite, gram_schmidt, right_action, DetMagnitude, DeterminantSuite, FMat};
pub use scalars::{FVector, Field, Scalar};
