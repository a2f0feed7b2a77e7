//! Simulator and analysis toolkit for a three-mode, four-pump nonreciprocal
//! phase-sensitive parametric amplifier.
//!
//! The crate models a field-programmable Josephson amplifier (FPJA): three
//! resonant circuit modes pairwise coupled by three frequency-conversion
//! pumps plus one amplification pump on the middle mode. Programmed this way
//! the device amplifies a single quadrature of the signal travelling in one
//! direction while passing the reverse direction with unity transmission.
//!
//! Modules:
//!
//! * [`coupled_modes`] - the mode-coupling matrix, mode-basis scattering
//!   (numeric and closed form), gain parameters, detuning sweeps;
//! * [`quadrature`] - rotation into the quadrature basis, phase-sensitive
//!   gain versus local-oscillator phase, squeezing metrics;
//! * [`noise`] - covariance propagation, added noise, measurement
//!   efficiency, the internal-loss-port extension;
//! * [`stability`] - the factored characteristic polynomial, numeric root
//!   finding, stability region maps, closed-form performance bounds;
//! * [`tuning`] - the four-step programming procedure as numerical
//!   calibration against the simulated device;
//! * [`config`] - configuration files, units, validation;
//! * [`commands`] - the table-emitting analyses behind the `fpja` binary.

pub mod commands;
pub mod config;
pub mod coupled_modes;
pub mod error;
pub mod linalg;
pub mod noise;
pub mod quadrature;
pub mod stability;
pub mod tuning;

pub use error::{Error, ErrorKind, Result};


#[cfg(doctest)]
mod book_doctests {
    //! Every code block in the guide compiles and runs as a doctest, keeping
    //! the book in sync with the library.
    #[doc = include_str!("../../../book/src/coupled-modes.md")]
    pub struct CoupledModesChapter;
    #[doc = include_str!("../../../book/src/quadratures.md")]
    pub struct QuadraturesChapter;
    #[doc = include_str!("../../../book/src/noise.md")]
    pub struct NoiseChapter;
    #[doc = include_str!("../../../book/src/stability.md")]
    pub struct StabilityChapter;
    #[doc = include_str!("../../../book/src/tuning.md")]
    pub struct TuningChapter;
}
