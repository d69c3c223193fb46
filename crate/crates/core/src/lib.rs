//! Numerical potential theory on cones: radial ODE bases, spherical
//! eigenpairs, Green/Martin kernel surrogates, discrete equilibrium
//! measures, and Wiener-type series classification of subsets as
//! minimally thin or rarefied at infinity.

pub mod capacity;
pub mod criteria;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod radial;
pub mod sets;
pub mod spherical;

pub use error::{Error, Result};
pub use geometry::Point;
