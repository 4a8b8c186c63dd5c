//! Per-pair phase samples for the two source models.
//!
//! * Independent lasers: each pair interferes with phase `φ + ζ_j − δf_is τ`,
//!   where `δf_is = δf_i − δf_s` is the difference of two independent detunings.
//! * SPDC pairs: detunings are locked at `±δf_j`, giving `φ′ + ζ_j − 2 δf_j τ`.
//!   A detuning swap exchanges which photon carries `+δf_j`, and with it the
//!   port each bunched pair exits from.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::closed_form_intensities;
use crate::quadrature::gauss_legendre;
use crate::spectral::{
    build_grid, envelope_value, filter_grid, DetuningGrid, Envelope, GridNode, SamplingScheme,
    SpectralProfile,
};

const SWAP_STREAM: u64 = 1;
const ZETA_STREAM: u64 = 2;
const IDLER_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

pub const DEFAULT_ZETA_NODES: usize = 32;

/// Spread of the per-pair initial phase difference `ζ_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZetaModel {
    Fixed(f64),
    /// `ζ_j ~ Uniform[−a, +a]` with the given half-width `a ∈ [0, π]`.
    Uniform(f64),
}

impl ZetaModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ZetaModel::Fixed(v) if !v.is_finite() => Err(Error::invalid(format!(
                "fixed zeta must be finite, got {v}"
            ))),
            ZetaModel::Uniform(a) if !(0.0..=std::f64::consts::PI).contains(&a) => {
                Err(Error::invalid(format!(
                    "uniform zeta half-width must lie in [0, pi], got {a}"
                )))
            }
            _ => Ok(()),
        }
    }
}

impl Default for ZetaModel {
    fn default() -> Self {
        ZetaModel::Fixed(0.0)
    }
}

/// How a uniform `ζ` spread is discretised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZetaSampling {
    /// Gauss-Legendre rule over `[−a, a]`.
    Quadrature { nodes: usize },
    /// Seeded uniform draws with equal weights.
    MonteCarlo { draws: usize, seed: u64 },
}

impl Default for ZetaSampling {
    fn default() -> Self {
        ZetaSampling::Quadrature {
            nodes: DEFAULT_ZETA_NODES,
        }
    }
}

/// Returns `(ζ, weight)` pairs with weights summing to one.
pub fn zeta_draws(model: ZetaModel, sampling: ZetaSampling) -> Result<Vec<(f64, f64)>> {
    model.validate()?;
    let a = match model {
        ZetaModel::Fixed(v) => return Ok(vec![(v, 1.0)]),
        ZetaModel::Uniform(0.0) => return Ok(vec![(0.0, 1.0)]),
        ZetaModel::Uniform(a) => a,
    };
    match sampling {
        ZetaSampling::Quadrature { nodes } => {
            if nodes == 0 {
                return Err(Error::invalid("zeta quadrature needs at least one node"));
            }
            let (x, w) = gauss_legendre(nodes);
            Ok(x.into_iter()
                .zip(w)
                .map(|(x, w)| (a * x, 0.5 * w))
                .collect())
        }
        ZetaSampling::MonteCarlo { draws, seed } => {
            if draws == 0 {
                return Err(Error::invalid("zeta sampling needs at least one draw"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(ZETA_STREAM);
            let w = 1.0 / draws as f64;
            Ok((0..draws).map(|_| (rng.random_range(-a..=a), w)).collect())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalSource {
    pub phi: f64,
    pub zeta: ZetaModel,
    pub delta_s: f64,
    pub delta_i: f64,
}

impl ClassicalSource {
    pub fn new(phi: f64, zeta: ZetaModel, delta_s: f64, delta_i: f64) -> Result<Self> {
        if !(delta_s > 0.0 && delta_i > 0.0) {
            return Err(Error::invalid("laser widths must be positive"));
        }
        if !phi.is_finite() {
            return Err(Error::invalid("phi must be finite"));
        }
        zeta.validate()?;
        Ok(Self {
            phi,
            zeta,
            delta_s,
            delta_i,
        })
    }

    /// Width of the difference distribution `δf_is`.
    pub fn difference_width(&self) -> f64 {
        self.delta_s.hypot(self.delta_i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwapMode {
    /// Both detuning assignments, each at half weight.
    ExactHalf,
    /// One seeded coin flip per pair.
    Bernoulli,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdcSource {
    pub phi_prime: f64,
    pub zeta: ZetaModel,
    pub delta: f64,
    pub swap: SwapMode,
    /// Seed for [`SwapMode::Bernoulli`].
    pub swap_seed: u64,
}

impl SpdcSource {
    pub fn new(phi_prime: f64, zeta: ZetaModel, delta: f64, swap: SwapMode) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::invalid("pair-distribution width must be positive"));
        }
        if !phi_prime.is_finite() {
            return Err(Error::invalid("phi_prime must be finite"));
        }
        zeta.validate()?;
        Ok(Self {
            phi_prime,
            zeta,
            delta,
            swap,
            swap_seed: 0,
        })
    }

    pub fn with_swap_seed(mut self, seed: u64) -> Self {
        self.swap_seed = seed;
        self
    }
}

/// Which way round a pair's detunings (and so its output ports) are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSample {
    /// Index of the detuning node this sample belongs to.
    pub node: usize,
    pub theta: f64,
    pub g: f64,
    pub weight: f64,
    pub sign: Sign,
}

impl PhaseSample {
    /// Port intensities in units of `I_0`. The minus branch exits through
    /// the opposite ports.
    pub fn intensities(&self) -> (f64, f64) {
        let (a, b) = closed_form_intensities(self.theta, self.g, 1.0)
            .expect("sample visibility lies in [0, 1]");
        match self.sign {
            Sign::Plus => (a, b),
            Sign::Minus => (b, a),
        }
    }
}

pub fn classical_phase(src: &ClassicalSource, delta_f_is: f64, zeta_j: f64, tau: f64) -> f64 {
    src.phi + zeta_j - delta_f_is * tau
}

pub fn spdc_phase(src: &SpdcSource, delta_f: f64, zeta_j: f64, tau: f64, sign: Sign) -> f64 {
    let signed = match sign {
        Sign::Plus => delta_f,
        Sign::Minus => -delta_f,
    };
    src.phi_prime + zeta_j - 2.0 * signed * tau
}

/// Detuning nodes for the two-laser model.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassicalGrid {
    /// One grid directly over `δf_is` with width `√(Δ_s² + Δ_i²)`.
    Collapsed(DetuningGrid),
    /// Independent signal and idler grids. Grid schemes form the full tensor
    /// product; Monte-Carlo grids are paired draw by draw.
    Product {
        signal: DetuningGrid,
        idler: DetuningGrid,
    },
}

impl ClassicalGrid {
    pub fn collapsed(
        src: &ClassicalSource,
        span: f64,
        n: usize,
        scheme: SamplingScheme,
        seed: u64,
    ) -> Result<Self> {
        let profile = SpectralProfile::new(src.difference_width(), span)?;
        Ok(ClassicalGrid::Collapsed(build_grid(
            &profile, n, scheme, seed,
        )?))
    }

    pub fn product(
        src: &ClassicalSource,
        span: f64,
        n: usize,
        scheme: SamplingScheme,
        seed: u64,
    ) -> Result<Self> {
        let signal = build_grid(&SpectralProfile::new(src.delta_s, span)?, n, scheme, seed)?;
        let idler = build_grid(
            &SpectralProfile::new(src.delta_i, span)?,
            n,
            scheme,
            seed.wrapping_add(IDLER_SEED_OFFSET),
        )?;
        Ok(ClassicalGrid::Product { signal, idler })
    }

    /// Drops nodes beyond `half_span` widths: `Δ_eff` for the collapsed grid,
    /// each laser's own width for the product grid.
    pub fn filter(&self, src: &ClassicalSource, half_span: f64) -> Result<Self> {
        Ok(match self {
            ClassicalGrid::Collapsed(g) => {
                ClassicalGrid::Collapsed(filter_grid(g, half_span * src.difference_width())?)
            }
            ClassicalGrid::Product { signal, idler } => ClassicalGrid::Product {
                signal: filter_grid(signal, half_span * src.delta_s)?,
                idler: filter_grid(idler, half_span * src.delta_i)?,
            },
        })
    }

    /// Flattens to `(δf_is, weight)` nodes.
    pub fn difference_nodes(&self) -> Vec<GridNode> {
        match self {
            ClassicalGrid::Collapsed(g) => g.nodes().to_vec(),
            ClassicalGrid::Product { signal, idler }
                if signal.scheme() == SamplingScheme::MonteCarlo
                    && idler.scheme() == SamplingScheme::MonteCarlo =>
            {
                let w = 1.0 / signal.len().min(idler.len()) as f64;
                signal
                    .nodes()
                    .iter()
                    .zip(idler.nodes())
                    .map(|(s, i)| GridNode {
                        delta_f: i.delta_f - s.delta_f,
                        weight: w,
                    })
                    .collect()
            }
            ClassicalGrid::Product { signal, idler } => signal
                .nodes()
                .iter()
                .flat_map(|s| {
                    idler.nodes().iter().map(move |i| GridNode {
                        delta_f: i.delta_f - s.delta_f,
                        weight: s.weight * i.weight,
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    Classical(ClassicalSource),
    Spdc(SpdcSource),
}

/// A source bound to its detuning nodes, envelope and `ζ` discretisation;
/// produces the weighted phase samples at any delay.
#[derive(Debug, Clone)]
pub struct Ensemble {
    source: Source,
    nodes: Vec<GridNode>,
    envelope: Envelope,
    envelope_width: f64,
    zeta: Vec<(f64, f64)>,
    /// Per-node swap assignment for Bernoulli mode.
    coin: Vec<Sign>,
}

impl Ensemble {
    pub fn spdc(
        src: SpdcSource,
        grid: &DetuningGrid,
        envelope: Envelope,
        zeta: ZetaSampling,
    ) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::EmptyGrid {
                half_span: f64::NAN,
            });
        }
        let coin = if src.swap == SwapMode::Bernoulli {
            let mut rng = ChaCha8Rng::seed_from_u64(src.swap_seed);
            rng.set_stream(SWAP_STREAM);
            (0..grid.len())
                .map(|_| {
                    if rng.random::<bool>() {
                        Sign::Plus
                    } else {
                        Sign::Minus
                    }
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            source: Source::Spdc(src),
            nodes: grid.nodes().to_vec(),
            envelope,
            envelope_width: src.delta,
            zeta: zeta_draws(src.zeta, zeta)?,
            coin,
        })
    }

    pub fn classical(
        src: ClassicalSource,
        grid: &ClassicalGrid,
        envelope: Envelope,
        zeta: ZetaSampling,
    ) -> Result<Self> {
        let nodes = grid.difference_nodes();
        if nodes.is_empty() {
            return Err(Error::EmptyGrid {
                half_span: f64::NAN,
            });
        }
        let total: f64 = nodes.iter().map(|n| n.weight).sum();
        let nodes = nodes
            .into_iter()
            .map(|n| GridNode {
                delta_f: n.delta_f,
                weight: n.weight / total,
            })
            .collect();
        Ok(Self {
            source: Source::Classical(src),
            nodes,
            envelope,
            // G(δf_is/√2, Δ) for equal widths
            envelope_width: src.difference_width(),
            zeta: zeta_draws(src.zeta, zeta)?,
            coin: Vec::new(),
        })
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn envelope(&self) -> Envelope {
        self.envelope
    }

    /// Detuning of each node: `δf_j` for SPDC, `δf_is` for lasers.
    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    pub fn node_envelope(&self, node: usize) -> f64 {
        envelope_value(self.envelope, self.nodes[node].delta_f, self.envelope_width)
    }

    /// All phase samples at delay `tau`, ordered by node, then `ζ` draw, then
    /// swap branch. Weights sum to one.
    pub fn samples(&self, tau: f64) -> Vec<PhaseSample> {
        let branches = match self.source {
            Source::Spdc(s) if s.swap == SwapMode::ExactHalf => 2,
            _ => 1,
        };
        let mut out = Vec::with_capacity(self.nodes.len() * self.zeta.len() * branches);
        for (idx, node) in self.nodes.iter().enumerate() {
            let g = self.node_envelope(idx);
            for &(zeta, zw) in &self.zeta {
                let weight = node.weight * zw;
                match self.source {
                    Source::Classical(ref src) => out.push(PhaseSample {
                        node: idx,
                        theta: classical_phase(src, node.delta_f, zeta, tau),
                        g,
                        weight,
                        sign: Sign::Plus,
                    }),
                    Source::Spdc(ref src) => {
                        let signs: &[Sign] = match src.swap {
                            SwapMode::ExactHalf => &[Sign::Plus, Sign::Minus],
                            SwapMode::Off => &[Sign::Plus],
                            SwapMode::Bernoulli => std::slice::from_ref(&self.coin[idx]),
                        };
                        let bw = weight / signs.len() as f64;
                        for &sign in signs {
                            out.push(PhaseSample {
                                node: idx,
                                theta: spdc_phase(src, node.delta_f, zeta, tau, sign),
                                g,
                                weight: bw,
                                sign,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// Phase samples of `ensemble` at delay `tau`.
pub fn sample_ensemble(ensemble: &Ensemble, tau: f64) -> Vec<PhaseSample> {
    ensemble.samples(tau)
}
