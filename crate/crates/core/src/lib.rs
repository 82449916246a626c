//! Exterior scattering by a bounded obstacle, computed through the
//! limiting absorption principle.
//!
//! The absorbed problem (spectral parameter k^2 + i eps) is solved with P1
//! finite elements on a truncated shell mesh for a decreasing sequence of
//! eps, the iterates are extrapolated to eps = 0 in a weighted L2 norm, and
//! the result is continued outside the mesh with Green representation
//! formulas. Separation-of-variables sphere solutions serve as ground truth.

pub mod error;
pub mod geometry;
pub mod quadrature;

pub use error::{Error, Result};
pub mod assembly;
pub mod coefficients;
pub mod field;
pub mod sparse;
pub mod lap;
pub mod oracle;
pub mod representation;
pub mod verification;
pub mod pipeline;
