//! Strong-field simulation of high-harmonic generation driven by a bicircular
//! (counter-rotating ω + 2ω) field whose fluctuating component is sampled from
//! a Gaussian phase-space distribution.
//!
//! The pipeline is: build the classical drive and its fluctuation distribution
//! ([`field`]), propagate each sampled field through the strong-field
//! approximation to get a dipole trace ([`sfa`]), extract complex harmonic
//! amplitudes in the circular basis ([`spectra`]), and reduce an ensemble of
//! such runs into per-harmonic intensity moments, helicity and photon
//! statistics ([`ensemble`]). The [`rules`] module carries the analytic side:
//! photon-exchange channel enumeration, selection rules, and closed-form
//! g²(0) values. [`oracles`] holds independent brute-force verifiers used by
//! the test suites.
//!
//! All quantities are in atomic units unless noted otherwise.

pub mod ensemble;
pub mod error;
pub mod field;
pub mod oracles;
pub mod rules;
pub mod sfa;
pub mod spectra;

pub use error::{Error, Result};
