//! Rayleigh surface waves in a vertically inhomogeneous elastic half-space:
//! Jost solutions, the Rayleigh determinant on the four sheets of the
//! quasi-momentum surface, the entire function `F`, the transformed
//! (matrix Schrodinger) frame, zero finding and growth/counting checks.

pub mod analysis;
pub mod config;
pub mod error;
pub mod medium;
pub mod model;
pub mod ode;
pub mod pm_transform;
pub mod quadrature;
pub mod rayleigh_ode;
pub mod riemann;
pub mod spectral;

pub use error::{Error, Result};
pub use medium::{ElasticProfile, HalfSpaceConstants, PotentialSpec, TransformData};
pub use model::SpectralModel;
pub use riemann::{CutSide, QuasiMomenta, SheetTag, Sign, SpectralPoint, C64};
