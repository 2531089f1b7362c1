//! Effective nonlinear Dirac (NLD) dynamics of the 1-D cubic Schrödinger
//! equation with a periodic potential, near the band crossing at k = pi.
//!
//! The crate computes Floquet-Bloch band structures, detects the Dirac point
//! of half-periodic cosine potentials, builds the symmetry-adapted Bloch pair
//! and the effective coefficients (c_sharp, beta_1, beta_2), evolves both the
//! effective NLD envelope system and the semiclassical NLS, assembles the
//! two-scale approximation with its first-order corrector, and runs the
//! end-to-end convergence study measuring the O(eps) approximation rate.
//!
//! Core math is generic over the float type via [`Real`]; `f64` aliases are
//! exported at the crate root.

pub mod bloch;
pub mod config;
pub mod dirac;
pub mod error;
pub mod field;
pub mod grid;
pub mod multiscale;
pub mod nld;
pub mod nls;
pub mod potential;
pub mod report;
pub mod scalar;
pub mod spectral;
pub mod study;

pub use error::{Error, Result};
pub use scalar::Real;

/// Complex sample type of the `f64` instantiation.
pub type C64 = num_complex::Complex<f64>;

pub type TorusGrid64 = grid::TorusGrid<f64>;
pub type WaveField64 = field::WaveField<f64>;
pub type SobolevIndex64 = field::SobolevIndex<f64>;
pub type PeriodicPotential64 = potential::PeriodicPotential<f64>;
pub type BlochWave64 = bloch::BlochWave<f64>;
pub type BandStructure64 = bloch::BandStructure<f64>;
pub type DiracPointData64 = dirac::DiracPointData<f64>;
pub type SpinorField64 = nld::SpinorField<f64>;
pub type NLDParams64 = nld::NLDParams<f64>;
pub type NLSParams64 = nls::NLSParams<f64>;
pub type StudyConfig64 = study::StudyConfig<f64>;
