//! Computational realisation of a quasi-Fuchsian construction with many
//! minimal surfaces: Moebius arithmetic, circle geometry, hyperbolic
//! catenoids, inversion groups and their limit sets, and certificate checks.

pub mod catenoid;
pub mod circle;
pub mod construction;
pub mod error;
pub mod io;
pub mod kleinian;
pub mod moebius;
mod ode;
pub mod polyline;
pub mod render;
mod spatial;
pub mod vec3;

pub use error::{BuildError, ChainError, GeomError, IoError, SolveError};

/// Double-precision aliases used throughout the f64-only modules.
pub type Complex = num_complex::Complex<f64>;
pub type Point = vec3::Vec3<f64>;
pub type Circle = circle::SphereCircle<f64>;
pub type Mobius = moebius::MobiusMap<f64>;
pub type ExtPoint = moebius::ExtComplex<f64>;
