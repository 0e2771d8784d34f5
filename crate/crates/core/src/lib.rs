//! Numerical toolkit for boundary σ₂-curvature problems: symmetric-function
//! algebra and Gårding cones, conformal transformation laws, explicit bubble,
//! barrier and radial solution families, ellipsoid umbilic geometry, and
//! continuation solvers on radially symmetric model geometries.

pub mod bubble;
pub mod conformal;
pub mod eigenpath;
pub mod ellipsoid;
pub mod error;
pub mod radial;
pub mod symfunc;
pub mod verify;

pub use error::{Result, Sigma2Error};
