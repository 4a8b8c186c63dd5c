//! Gaussian photon distributions and their discretisation.
//!
//! Widths are standard deviations. In simulation units `Δ = 1`, so detunings
//! are in units of `Δ` and delays in units of `Δ⁻¹`.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SPAN: f64 = 2.0;
pub const DEFAULT_NODES: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralProfile {
    /// Centre frequency; detunings are measured from it, so it never enters a phase.
    pub f0: f64,
    pub delta: f64,
    /// Half-range of the detuning axis in units of `delta`.
    pub span_halfwidth: f64,
}

impl SpectralProfile {
    pub fn new(delta: f64, span_halfwidth: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::invalid(format!(
                "spectral width must be positive, got {delta}"
            )));
        }
        if !(span_halfwidth > 0.0) || !span_halfwidth.is_finite() {
            return Err(Error::invalid(format!(
                "span half-width must be positive, got {span_halfwidth}"
            )));
        }
        Ok(Self {
            f0: 0.0,
            delta,
            span_halfwidth,
        })
    }

    /// Half-range of the detuning axis in absolute detuning units.
    pub fn half_range(&self) -> f64 {
        self.span_halfwidth * self.delta
    }
}

impl Default for SpectralProfile {
    fn default() -> Self {
        Self {
            f0: 0.0,
            delta: 1.0,
            span_halfwidth: DEFAULT_SPAN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    /// `G(δf) = exp(−δf²/2Δ²)`, peak value one.
    Gaussian,
    /// `G ≡ 1`.
    Unity,
}

/// Visibility envelope `G(δf)` and the power `p` it carries in the coincidence integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Envelope {
    pub kind: EnvelopeKind,
    pub exponent_p: u8,
}

impl Envelope {
    pub fn new(kind: EnvelopeKind, exponent_p: u8) -> Result<Self> {
        if !matches!(exponent_p, 1 | 2) {
            return Err(Error::invalid(format!(
                "envelope exponent must be 1 or 2, got {exponent_p}"
            )));
        }
        Ok(Self { kind, exponent_p })
    }

    pub fn unity() -> Self {
        Self {
            kind: EnvelopeKind::Unity,
            exponent_p: 1,
        }
    }

    pub fn gaussian(exponent_p: u8) -> Result<Self> {
        Self::new(EnvelopeKind::Gaussian, exponent_p)
    }
}

impl Default for Envelope {
    fn default() -> Self {
        Self {
            kind: EnvelopeKind::Gaussian,
            exponent_p: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingScheme {
    /// Uniformly spaced nodes weighted by the Gaussian density.
    Grid,
    /// Seeded i.i.d. Gaussian draws with equal weights.
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridNode {
    pub delta_f: f64,
    pub weight: f64,
}

/// A weighted set of detunings whose weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningGrid {
    nodes: Vec<GridNode>,
    scheme: SamplingScheme,
    seed: Option<u64>,
}

impl DetuningGrid {
    /// Builds a grid from explicit nodes, renormalising the weights.
    pub fn from_nodes(nodes: Vec<GridNode>, scheme: SamplingScheme) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::invalid("a detuning grid needs at least one node"));
        }
        if nodes
            .iter()
            .any(|n| !n.delta_f.is_finite() || !n.weight.is_finite() || n.weight < 0.0)
        {
            return Err(Error::invalid(
                "grid nodes must be finite with nonnegative weights",
            ));
        }
        let total: f64 = nodes.iter().map(|n| n.weight).sum();
        if !(total > 0.0) {
            return Err(Error::invalid("grid weights sum to zero"));
        }
        let nodes = nodes
            .into_iter()
            .map(|n| GridNode {
                delta_f: n.delta_f,
                weight: n.weight / total,
            })
            .collect();
        Ok(Self {
            nodes,
            scheme,
            seed: None,
        })
    }

    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn scheme(&self) -> SamplingScheme {
        self.scheme
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn weight_sum(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    /// True when `δf → −δf` maps the node set onto itself with equal weights.
    pub fn is_symmetric(&self) -> bool {
        self.nodes.iter().all(|n| {
            self.nodes
                .iter()
                .any(|m| m.delta_f == -n.delta_f && m.weight == n.weight)
        })
    }
}

pub fn gaussian_density(delta_f: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!(
            "spectral width must be positive, got {delta}"
        )));
    }
    Ok(density_unchecked(delta_f, delta))
}

fn density_unchecked(delta_f: f64, delta: f64) -> f64 {
    let z = delta_f / delta;
    (-0.5 * z * z).exp() / (delta * (2.0 * PI).sqrt())
}

/// `G(δf)` before raising to the envelope exponent. Always in `[0, 1]`.
pub fn envelope_value(env: Envelope, delta_f: f64, delta: f64) -> f64 {
    match env.kind {
        EnvelopeKind::Unity => 1.0,
        EnvelopeKind::Gaussian => {
            let z = delta_f / delta;
            (-0.5 * z * z).exp()
        }
    }
}

pub fn build_grid(
    profile: &SpectralProfile,
    n: usize,
    scheme: SamplingScheme,
    seed: u64,
) -> Result<DetuningGrid> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "a detuning grid needs n >= 2 nodes, got {n}"
        )));
    }
    let half = profile.half_range();
    match scheme {
        SamplingScheme::Grid => {
            // Integer offsets keep node k and node n-1-k exact negatives.
            let denom = (n - 1) as f64;
            let nodes = (0..n)
                .map(|k| {
                    let m = 2 * k as i64 - (n as i64 - 1);
                    let delta_f = half * (m as f64) / denom;
                    GridNode {
                        delta_f,
                        weight: density_unchecked(delta_f, profile.delta),
                    }
                })
                .collect();
            DetuningGrid::from_nodes(nodes, SamplingScheme::Grid)
        }
        SamplingScheme::MonteCarlo => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, profile.delta)
                .map_err(|e| Error::invalid(format!("bad normal distribution: {e}")))?;
            let weight = 1.0 / n as f64;
            let mut nodes = Vec::with_capacity(n);
            while nodes.len() < n {
                let x: f64 = normal.sample(&mut rng);
                if x.abs() <= half {
                    nodes.push(GridNode { delta_f: x, weight });
                }
            }
            let mut grid = DetuningGrid::from_nodes(nodes, SamplingScheme::MonteCarlo)?;
            grid.seed = Some(seed);
            Ok(grid)
        }
    }
}

/// Drops nodes with `|δf| > half_span` and renormalises the rest.
pub fn filter_grid(grid: &DetuningGrid, half_span: f64) -> Result<DetuningGrid> {
    if !(half_span > 0.0) {
        return Err(Error::invalid(format!(
            "filter half-span must be positive, got {half_span}"
        )));
    }
    let kept: Vec<GridNode> = grid
        .nodes
        .iter()
        .copied()
        .filter(|n| n.delta_f.abs() <= half_span)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyGrid { half_span });
    }
    if kept.len() == grid.nodes.len() {
        return Ok(grid.clone());
    }
    let mut filtered = DetuningGrid::from_nodes(kept, grid.scheme)?;
    filtered.seed = grid.seed;
    Ok(filtered)
}
