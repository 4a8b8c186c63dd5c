//! Two-mode field algebra: a phase element on the idler arm followed by a
//! lossless 50/50 beam splitter with matrix `(1/√2)[[1, i], [i, 1]]`.
//!
//! Amplitudes are dimensionless; `|E|²` is an intensity in units of `I_0`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A complex field amplitude.
pub type ComplexAmp = Complex64;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Signal and idler amplitudes entering the beam splitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPair {
    pub e_s: ComplexAmp,
    pub e_i: ComplexAmp,
}

impl FieldPair {
    pub fn new(e_s: ComplexAmp, e_i: ComplexAmp) -> Self {
        Self { e_s, e_i }
    }

    pub fn total_intensity(&self) -> f64 {
        self.e_s.norm_sqr() + self.e_i.norm_sqr()
    }
}

/// Amplitudes leaving the beam splitter towards detectors A and B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputFields {
    pub e_a: ComplexAmp,
    pub e_b: ComplexAmp,
}

impl OutputFields {
    pub fn new(e_a: ComplexAmp, e_b: ComplexAmp) -> Self {
        Self { e_a, e_b }
    }
}

/// Multiplies the idler amplitude by `e^{iφ}`; the signal passes unchanged.
pub fn phase_element(pair: FieldPair, phi: f64) -> Result<FieldPair> {
    if !phi.is_finite() {
        return Err(Error::invalid(format!("phase must be finite, got {phi}")));
    }
    Ok(FieldPair {
        e_s: pair.e_s,
        e_i: pair.e_i * Complex64::from_polar(1.0, phi),
    })
}

pub fn beam_split(pair: FieldPair) -> OutputFields {
    let i = Complex64::i();
    OutputFields {
        e_a: (pair.e_s + i * pair.e_i) * FRAC_1_SQRT_2,
        e_b: (i * pair.e_s + pair.e_i) * FRAC_1_SQRT_2,
    }
}

/// Returns `(|e_a|², |e_b|²)`.
pub fn port_intensities(out: OutputFields) -> (f64, f64) {
    (out.e_a.norm_sqr(), out.e_b.norm_sqr())
}

/// Port intensities for two equal-intensity inputs with total relative phase
/// `theta` and fringe visibility `g`:
/// `i_a = i0 (1 − g sin θ)`, `i_b = i0 (1 + g sin θ)`.
pub fn closed_form_intensities(theta: f64, g: f64, i0: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&g) {
        return Err(Error::invalid(format!(
            "visibility must lie in [0, 1], got {g}"
        )));
    }
    if !(i0 > 0.0) {
        return Err(Error::invalid(format!(
            "intensity unit must be positive, got {i0}"
        )));
    }
    let s = theta.sin() * g;
    Ok((i0 * (1.0 - s), i0 * (1.0 + s)))
}
