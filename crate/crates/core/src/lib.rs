//! Stochastic Lagrangian flows on the flat torus and the viscous
//! Camassa-Holm / Leray-alpha equations they generate.
//!
//! * [`fourier_basis`]: divergence-free Fourier modes, noise weights and
//!   generator constants.
//! * [`group_brownian`]: Euler-Maruyama simulation of the truncated
//!   diffeomorphism-group Brownian motion, drifted flows, Monte Carlo generator
//!   estimates and regularity diagnostics.
//! * [`spectral`]: pseudo-spectral solvers with Helmholtz inversion and Leray
//!   projection.
//! * [`variational`]: the H¹ action, admissible variations, first-variation
//!   identities and the constrained action minimization.
//!
//! Every numerical type is generic over [`Real`]; `f64` aliases are provided
//! at the crate root.

pub mod error;
pub mod fourier_basis;
pub mod group_brownian;
pub mod rng;
pub mod scalar;
pub mod spectral;
pub mod torus;
pub mod variational;

pub use error::{Error, Result};
pub use scalar::Real;

pub type BasisSet64 = fourier_basis::BasisSet<f64>;
pub type GeneratorConstants64 = fourier_basis::GeneratorConstants<f64>;
pub type FlowConfig64 = group_brownian::FlowConfig<f64>;
pub type ParticleEnsemble64 = group_brownian::ParticleEnsemble<f64>;
pub type SpectralField64 = spectral::SpectralField<f64>;
pub type DriftPath64 = spectral::DriftPath<f64>;
pub type Solver64 = spectral::Solver<f64>;
pub type VariationField64 = variational::VariationField<f64>;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
