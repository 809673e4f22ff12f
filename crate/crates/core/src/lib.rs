//! Simulation and asymptotic analysis of exponential functionals
//! I_t = ∫₀ᵗ e^{−ξ_s} ds of Lévy processes.

pub mod applications;
pub mod checks;
pub mod error;
pub mod estimator;
pub mod levy;
pub mod pathsim;
pub mod quad;
pub mod regimes;
pub mod rng;
pub mod stats;

pub use error::{Error, ErrorKind, Result};
pub use levy::{Cutoff, Domain, ExponentProfile, JumpMeasure, LaplaceExponent, LevySpec, PointMass};

/// Library version, embedded in every CLI report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
