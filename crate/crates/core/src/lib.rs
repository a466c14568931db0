//! Numerical laboratory for the steady compressible Oseen system with slip
//! boundary conditions on convex planar domains.
//!
//! The pipeline: a Galerkin solve for the velocity with the density
//! reconstructed along horizontal characteristics, a Helmholtz split of the
//! velocity, the transport equation for the density gradient, and a
//! classifier deciding from the boundary shape near its two singularity
//! points whether the density-regularity argument applies.

pub mod error;
pub mod expr;
pub mod fields;
pub mod flatness;
pub mod gauss;
pub mod geometry;
pub mod galerkin;
pub mod helmholtz;
pub mod integrate;
pub mod jet;
pub mod legendre;
pub mod linalg;
pub mod quadrature;
pub mod transport;
pub mod verify;

pub use error::{Error, Result};
