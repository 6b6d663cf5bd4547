//! Simulation and Monte Carlo verification of long-range-dependent
//! subordinated Gaussian sequences: the linear process and its subordination,
//! partial sums and their counting process, Vervaat-type integrals, empirical
//! Bahadur–Kiefer processes, and fractional Brownian motion couplings.

pub mod empirical;
pub mod error;
pub mod experiments;
pub mod fbm;
pub mod fft;
pub mod gauss_lrd;
pub mod hermite;
pub mod normal;
pub mod processes;
pub mod quad;
pub mod subordinator;

pub use error::{LabError, Result};
