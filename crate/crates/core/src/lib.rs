//! Closed-form value functions and exercise thresholds for a refracted
//! multiple stopping problem with call payoff `e^x - K`, driven by a
//! spectrally negative Lévy process with phase-type jumps, plus a Monte Carlo
//! engine for independent checks.

pub mod cli;
pub mod config;
pub mod error;
pub mod mc;
pub mod model;
pub mod phase_type;
pub mod poly;
pub mod recursion;
pub mod spectral;
pub mod sum;

pub use error::{Error, Result};
pub use model::LevyModel;
pub use phase_type::PhaseTypeDistribution;
pub use spectral::{spectral_roots, SpectralData};
