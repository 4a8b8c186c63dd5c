//! Wave-optics simulation of Hong-Ou-Mandel anticorrelation.
//!
//! Photon pairs are treated as classical field amplitudes. Each pair picks up a
//! detuning-dependent phase, passes a phase element and a 50/50 beam splitter,
//! and the port intensities are averaged over a Gaussian spectral ensemble to
//! give coincidence rates, mean intensities and g²(τ).
//!
//! The crate is organised bottom-up:
//!
//! - [`optics`]: complex amplitudes and the 2×2 interferometer algebra.
//! - [`spectral`]: Gaussian profiles, detuning grids, envelopes and filters.
//! - [`quadrature`]: Gauss-Legendre rules used for phase-spread averages.
//! - [`sources`]: per-pair phase samples for independent lasers and SPDC pairs.
//! - [`correlation`]: the ensemble engine producing [`correlation::CorrelationResult`].
//! - [`scenario`]: JSON configuration, scenario runners and CSV/JSON emitters.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlation;
pub mod error;
pub mod optics;
pub mod quadrature;
pub mod scenario;
pub mod sources;
pub mod spectral;

pub use error::{Error, Result};
