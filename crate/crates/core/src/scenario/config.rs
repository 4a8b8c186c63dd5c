//! Scenario configuration: a single flat JSON object.
//!
//! Every key is optional; missing keys take scenario-dependent defaults.
//! Angles may be numbers (radians) or strings such as `"pi/2"`, `"-3*pi/8"`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::correlation::{CoincidenceForm, TauGrid};
use crate::error::{Error, Result};
use crate::sources::{SwapMode, ZetaModel, DEFAULT_ZETA_NODES};
use crate::spectral::{EnvelopeKind, SamplingScheme, DEFAULT_NODES, DEFAULT_SPAN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Dip,
    Maps,
    Intensities,
    Filtered,
    G2,
    Dephasing,
    Classical,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Dip,
        Scenario::Maps,
        Scenario::Intensities,
        Scenario::Filtered,
        Scenario::G2,
        Scenario::Dephasing,
        Scenario::Classical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Dip => "dip",
            Scenario::Maps => "maps",
            Scenario::Intensities => "intensities",
            Scenario::Filtered => "filtered",
            Scenario::G2 => "g2",
            Scenario::Dephasing => "dephasing",
            Scenario::Classical => "classical",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|sc| sc.name() == s)
    }

    /// Scenarios whose tau grid must contain zero.
    pub fn needs_zero_delay(self) -> bool {
        matches!(self, Scenario::Dip | Scenario::Dephasing)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Spdc,
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicalLayout {
    Collapsed,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Fully resolved configuration. Serialises to JSON that parses back to an
/// identical value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub model: Model,
    pub phi: f64,
    pub phi_prime: f64,
    pub zeta: ZetaModel,
    pub delta: f64,
    pub delta_s: f64,
    pub delta_i: f64,
    pub swap: SwapMode,
    pub classical_grid: ClassicalLayout,
    pub span: f64,
    pub filter_half_span: f64,
    pub envelope: EnvelopeKind,
    pub p: u8,
    pub nodes: usize,
    pub scheme: SamplingScheme,
    pub seed: u64,
    pub zeta_nodes: usize,
    pub tau_start: f64,
    pub tau_stop: f64,
    pub tau_points: usize,
    pub form: CoincidenceForm,
    pub zeta_halfwidths: Vec<f64>,
    pub format: OutputFormat,
}

const KEYS: &[&str] = &[
    "scenario",
    "model",
    "phi",
    "phi_prime",
    "zeta",
    "delta",
    "delta_s",
    "delta_i",
    "swap",
    "classical_grid",
    "span",
    "filter_half_span",
    "envelope",
    "p",
    "nodes",
    "scheme",
    "seed",
    "zeta_nodes",
    "tau_start",
    "tau_stop",
    "tau_points",
    "form",
    "zeta_halfwidths",
    "format",
];

impl ScenarioConfig {
    /// All defaults for `scenario`.
    pub fn defaults(scenario: Scenario) -> Self {
        let (tau_start, tau_stop, tau_points) = match scenario {
            Scenario::Dip | Scenario::G2 | Scenario::Classical => (0.0, 3.0, 121),
            _ => (-3.0, 3.0, 241),
        };
        Self {
            scenario,
            model: if scenario == Scenario::Classical {
                Model::Classical
            } else {
                Model::Spdc
            },
            phi: 0.0,
            phi_prime: PI / 2.0,
            zeta: ZetaModel::Fixed(0.0),
            delta: 1.0,
            delta_s: 1.0,
            delta_i: 1.0,
            swap: match scenario {
                Scenario::Dip | Scenario::G2 | Scenario::Dephasing => SwapMode::ExactHalf,
                _ => SwapMode::Off,
            },
            classical_grid: ClassicalLayout::Collapsed,
            span: DEFAULT_SPAN,
            filter_half_span: 1.0,
            envelope: if scenario == Scenario::Dip {
                EnvelopeKind::Unity
            } else {
                EnvelopeKind::Gaussian
            },
            p: 1,
            nodes: DEFAULT_NODES,
            scheme: SamplingScheme::Grid,
            seed: 0,
            zeta_nodes: DEFAULT_ZETA_NODES,
            tau_start,
            tau_stop,
            tau_points,
            form: CoincidenceForm::Paper,
            zeta_halfwidths: (0..=8).map(|k| k as f64 * PI / 8.0).collect(),
            format: OutputFormat::Csv,
        }
    }

    pub fn tau_grid(&self) -> Result<TauGrid> {
        TauGrid::linspace(self.tau_start, self.tau_stop, self.tau_points)
            .map_err(|e| Error::config("tau_points", e.to_string()))
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serialises")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(
                    key,
                    format!("must be a positive finite number, got {v}"),
                ))
            }
        };
        positive("delta", self.delta)?;
        positive("delta_s", self.delta_s)?;
        positive("delta_i", self.delta_i)?;
        positive("span", self.span)?;
        positive("filter_half_span", self.filter_half_span)?;
        for (key, v) in [
            ("phi", self.phi),
            ("phi_prime", self.phi_prime),
            ("tau_start", self.tau_start),
            ("tau_stop", self.tau_stop),
        ] {
            if !v.is_finite() {
                return Err(Error::config(key, "must be finite"));
            }
        }
        self.zeta
            .validate()
            .map_err(|e| Error::config("zeta", e.to_string()))?;
        if !matches!(self.p, 1 | 2) {
            return Err(Error::config(
                "p",
                format!("must be 1 or 2, got {}", self.p),
            ));
        }
        if self.nodes < 2 {
            return Err(Error::config(
                "nodes",
                format!("must be at least 2, got {}", self.nodes),
            ));
        }
        if self.zeta_nodes == 0 {
            return Err(Error::config("zeta_nodes", "must be at least 1"));
        }
        if self.tau_points == 0 {
            return Err(Error::config("tau_points", "must be at least 1"));
        }
        if self.tau_points > 1 && self.tau_start >= self.tau_stop {
            return Err(Error::config("tau_stop", "must exceed tau_start"));
        }
        for &a in &self.zeta_halfwidths {
            if !(0.0..=PI).contains(&a) {
                return Err(Error::config(
                    "zeta_halfwidths",
                    format!("half-widths must lie in [0, pi], got {a}"),
                ));
            }
        }
        if self.scenario == Scenario::Dephasing && self.zeta_halfwidths.is_empty() {
            return Err(Error::config(
                "zeta_halfwidths",
                "at least one half-width is required",
            ));
        }
        if self.scenario == Scenario::Classical && self.model != Model::Classical {
            return Err(Error::config(
                "model",
                "the classical scenario needs model = classical",
            ));
        }
        let taus = self.tau_grid()?;
        if self.scenario.needs_zero_delay() && taus.index_of_zero().is_none() {
            return Err(Error::config(
                "tau_start",
                format!(
                    "the {} scenario needs tau = 0 on the tau grid",
                    self.scenario.name()
                ),
            ));
        }
        Ok(())
    }
}

/// Parses a config document. Empty or whitespace-only input yields the
/// default dip config.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    parse_config_with(text, Map::new())
}

/// Parses a config document and applies `overrides` on top of it before
/// defaults are resolved.
pub fn parse_config_with(text: &str, overrides: Map<String, Value>) -> Result<ScenarioConfig> {
    let mut map = if text.trim().is_empty() {
        Map::new()
    } else {
        match serde_json::from_str::<Value>(text) {
            Ok(Value::Object(m)) => m,
            Ok(_) => return Err(Error::config("<root>", "config must be a JSON object")),
            Err(e) => return Err(Error::config("<root>", format!("syntax error: {e}"))),
        }
    };
    map.extend(overrides);
    resolve(&map)
}

fn resolve(map: &Map<String, Value>) -> Result<ScenarioConfig> {
    if let Some(key) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(Error::config(key.as_str(), "unknown key"));
    }
    let scenario = match map.get("scenario") {
        None => Scenario::Dip,
        Some(v) => {
            let s = v
                .as_str()
                .ok_or_else(|| Error::config("scenario", "must be a string"))?;
            Scenario::parse(s)
                .ok_or_else(|| Error::config("scenario", format!("unknown scenario `{s}`")))?
        }
    };
    let mut cfg = ScenarioConfig::defaults(scenario);
    let r = Reader(map);

    if let Some(v) = r.enumeration(
        "model",
        &[("spdc", Model::Spdc), ("classical", Model::Classical)],
    )? {
        cfg.model = v;
    }
    if let Some(v) = r.angle("phi")? {
        cfg.phi = v;
    }
    if let Some(v) = r.angle("phi_prime")? {
        cfg.phi_prime = v;
    }
    if let Some(v) = r.zeta("zeta")? {
        cfg.zeta = v;
    }
    if let Some(v) = r.number("delta")? {
        cfg.delta = v;
    }
    if let Some(v) = r.number("delta_s")? {
        cfg.delta_s = v;
    }
    if let Some(v) = r.number("delta_i")? {
        cfg.delta_i = v;
    }
    if let Some(v) = r.enumeration(
        "swap",
        &[
            ("exact_half", SwapMode::ExactHalf),
            ("exact", SwapMode::ExactHalf),
            ("bernoulli", SwapMode::Bernoulli),
            ("off", SwapMode::Off),
        ],
    )? {
        cfg.swap = v;
    }
    if let Some(v) = r.enumeration(
        "classical_grid",
        &[
            ("collapsed", ClassicalLayout::Collapsed),
            ("product", ClassicalLayout::Product),
        ],
    )? {
        cfg.classical_grid = v;
    }
    if let Some(v) = r.number("span")? {
        cfg.span = v;
    }
    if let Some(v) = r.number("filter_half_span")? {
        cfg.filter_half_span = v;
    }
    if let Some(v) = r.enumeration(
        "envelope",
        &[
            ("gaussian", EnvelopeKind::Gaussian),
            ("unity", EnvelopeKind::Unity),
        ],
    )? {
        cfg.envelope = v;
    }
    if let Some(v) = r.unsigned("p")? {
        cfg.p = u8::try_from(v).map_err(|_| Error::config("p", "must be 1 or 2"))?;
    }
    if let Some(v) = r.unsigned("nodes")? {
        cfg.nodes = v as usize;
    }
    if let Some(v) = r.enumeration(
        "scheme",
        &[
            ("grid", SamplingScheme::Grid),
            ("monte_carlo", SamplingScheme::MonteCarlo),
        ],
    )? {
        cfg.scheme = v;
    }
    if let Some(v) = r.unsigned("seed")? {
        cfg.seed = v;
    }
    if let Some(v) = r.unsigned("zeta_nodes")? {
        cfg.zeta_nodes = v as usize;
    }
    if let Some(v) = r.number("tau_start")? {
        cfg.tau_start = v;
    }
    if let Some(v) = r.number("tau_stop")? {
        cfg.tau_stop = v;
    }
    if let Some(v) = r.unsigned("tau_points")? {
        cfg.tau_points = v as usize;
    }
    if let Some(v) = r.enumeration(
        "form",
        &[
            ("paper", CoincidenceForm::Paper),
            ("product", CoincidenceForm::Product),
        ],
    )? {
        cfg.form = v;
    }
    if let Some(v) = r.angles("zeta_halfwidths")? {
        cfg.zeta_halfwidths = v;
    }
    if let Some(v) = r.enumeration(
        "format",
        &[("csv", OutputFormat::Csv), ("json", OutputFormat::Json)],
    )? {
        cfg.format = v;
    }

    cfg.validate()?;
    Ok(cfg)
}

struct Reader<'a>(&'a Map<String, Value>);

impl Reader<'_> {
    fn number(&self, key: &str) -> Result<Option<f64>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| Error::config(key, format!("expected a number, got {v}"))),
        }
    }

    fn unsigned(&self, key: &str) -> Result<Option<u64>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v.as_u64().map(Some).ok_or_else(|| {
                Error::config(key, format!("expected a nonnegative integer, got {v}"))
            }),
        }
    }

    fn angle(&self, key: &str) -> Result<Option<f64>> {
        self.0.get(key).map(|v| angle_value(key, v)).transpose()
    }

    fn angles(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| angle_value(key, v))
                .collect::<Result<_>>()
                .map(Some),
            Some(v) => Err(Error::config(
                key,
                format!("expected an array of angles, got {v}"),
            )),
        }
    }

    fn zeta(&self, key: &str) -> Result<Option<ZetaModel>> {
        let Some(v) = self.0.get(key) else {
            return Ok(None);
        };
        let bad = || {
            Error::config(
                key,
                r#"expected {"fixed": angle} or {"uniform": half-width}"#,
            )
        };
        let obj = v.as_object().ok_or_else(bad)?;
        if obj.len() != 1 {
            return Err(bad());
        }
        let (kind, value) = obj.iter().next().expect("one entry");
        let angle = angle_value(key, value)?;
        let model = match kind.as_str() {
            "fixed" => ZetaModel::Fixed(angle),
            "uniform" => ZetaModel::Uniform(angle),
            _ => return Err(bad()),
        };
        model
            .validate()
            .map_err(|e| Error::config(key, e.to_string()))?;
        Ok(Some(model))
    }

    fn enumeration<T: Copy>(&self, key: &str, options: &[(&str, T)]) -> Result<Option<T>> {
        let Some(v) = self.0.get(key) else {
            return Ok(None);
        };
        let s = v
            .as_str()
            .ok_or_else(|| Error::config(key, format!("expected a string, got {v}")))?;
        options
            .iter()
            .find(|(name, _)| *name == s)
            .map(|(_, t)| Some(*t))
            .ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                Error::config(key, format!("`{s}` is not one of {}", names.join(", ")))
            })
    }
}

fn angle_value(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| Error::config(key, "angle out of range")),
        Value::String(s) => parse_angle(s).ok_or_else(|| {
            Error::config(
                key,
                format!("cannot read `{s}` as an angle (use radians or k*pi/m)"),
            )
        }),
        _ => Err(Error::config(key, format!("expected an angle, got {v}"))),
    }
}

/// Parses `"1.2"`, `"pi"`, `"-pi/2"`, `"3*pi/8"`, `"3pi/4"`.
pub fn parse_angle(text: &str) -> Option<f64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if let Ok(v) = s.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s.strip_prefix('+').unwrap_or(&s)),
    };
    let (before, after) = body.split_once("pi")?;
    let k = match before.strip_suffix('*').unwrap_or(before) {
        "" => 1.0,
        k => k.parse::<f64>().ok()?,
    };
    let m = match after {
        "" => 1.0,
        rest => rest.strip_prefix('/')?.parse::<f64>().ok()?,
    };
    if m == 0.0 || !k.is_finite() || !m.is_finite() {
        return None;
    }
    Some(sign * k * PI / m)
}
