//! Windowed Green function boundary-integral solver for electromagnetic
//! scattering by locally perturbed half-spaces.
//!
//! The unbounded interface is truncated by a smooth window, the resulting
//! second-kind integral equations (Müller for penetrable media, MFIE for a
//! perfectly conducting lower half-space) are discretised with RWG
//! functions and Galerkin testing, and the dense system is solved with
//! Jacobi-preconditioned GMRES. The numerical modules are generic over
//! [`scalar::Real`]; aliases for `f64` are provided at the crate root.

pub mod assembly;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod kernels;
pub mod media;
pub mod oracle;
pub mod quadrature;
pub mod scenario;
pub mod scalar;
pub mod solver;
pub mod vec3;
pub mod window;

pub use error::{Error, Result};
pub use scalar::{Real, C};
pub use vec3::{CVec3, Vec3};

/// Double-precision complex scalar.
pub type Complex64 = C<f64>;
pub type Point = Vec3<f64>;
pub type Field3 = CVec3<f64>;
pub type Mesh = geometry::TriangleMesh<f64>;
pub type Basis = geometry::RwgBasis<f64>;
pub type Geometry = geometry::GeometrySpec<f64>;
pub type Window = window::WindowParams<f64>;
