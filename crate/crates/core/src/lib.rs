//! Sampling-based and measurement-based approximation of stable LTI systems
//! acting on Paley-Wiener signals, with the diagnostics needed to observe
//! where these processes converge and where they blow up.
//!
//! Signals and systems are represented in the frequency domain on a uniform
//! periodic grid ([`spectral`]). The sampling side ([`sampling`]) builds
//! complete interpolating sequences and their reconstruction functions, the
//! measurement side ([`measurements`]) provides Walsh-Paley functionals, and
//! [`engines`] combines them into the approximation processes. [`diagnostics`]
//! holds the kernel norms, extremal transfer functions and growth fits.

pub mod diagnostics;
pub mod engines;
pub mod error;
pub mod measurements;
pub mod sampling;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
