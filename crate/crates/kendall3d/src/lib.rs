//! Geometry of Kendall's 3D shape space.
//!
//! The shape of a configuration of `k` labelled landmarks in 3D is what
//! remains after translation, scale, and rotation are removed. This crate
//! implements the standard computational route: configurations are
//! Helmertized and normalized onto the pre-shape sphere, and the shape space
//! is the quotient of that sphere by SO(3). Tangent vectors of the shape
//! space are modelled by horizontal tangent vectors of the sphere.
//!
//! Provided here:
//!
//! - [`shape`]: pre-shape construction, the vertical frame, sphere
//!   exponential/logarithm, and optimal rotation alignment;
//! - [`tangent`]: orthonormal bases of the horizontal space obtained as the
//!   kernel of a rank-4 endomorphism, with coordinate maps;
//! - [`curvature`]: the SVD-adapted Kendall basis and closed-form sectional
//!   curvature `K(u, v) = 1 + (3/4) |[u, v]^V|^2`;
//! - [`oracle`]: an independent finite-difference estimate of the vertical
//!   bracket norm used to cross-validate the closed form;
//! - [`simulate`]: Gaussian sampling in tangent coordinates projected back to
//!   the sphere;
//! - [`io`]: CSV/JSON landmark formats;
//! - [`cli`]: the `kendall3d` command-line tool.

pub mod cli;
pub mod curvature;
pub mod error;
pub mod io;
pub mod oracle;
pub mod shape;
pub mod simulate;
pub mod tangent;

pub use error::{Result, ShapeError};
pub use shape::{AmbientVector, Configuration, PreShape, VerticalFrame};
