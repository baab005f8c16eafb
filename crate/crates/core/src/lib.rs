//! Rate models, Monte Carlo simulation and parameter estimation for
//! integrated photon-pair sources whose output is contaminated by
//! photoluminescence.
//!
//! - [`model`]: closed-form singles, coincidence and CAR rates with the
//!   power-law and saturation noise laws, the off-resonant power law and the
//!   Lorentzian resonance of the noise generation rate.
//! - [`montecarlo`]: timestamp-level simulation of both detector channels.
//! - [`estimation`]: weighted nonlinear least squares for all of the above.
//! - [`design`]: what-if predictions for modified devices.
//! - [`cli_io`]: file formats and the command implementations behind the
//!   `pdc-noise` binary.

#[cfg(feature = "cli")]
pub mod cli_io;
pub mod design;
pub mod error;
pub mod estimation;
pub mod model;
pub mod montecarlo;
pub mod presets;

pub use error::{Error, Result};
