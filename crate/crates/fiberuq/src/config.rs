//! Problem configuration: a TOML file whose every field has a default.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fiber::{AspectMode, ClosureKind, FiberError, FomConfig, FomModel};
use crate::rheology::{ChannelGeometry, CrossWlfParams, ModelError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Fiber(#[from] FiberError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiberSettings {
    /// mm
    pub diameter: f64,
    pub aspect: AspectMode,
}

impl Default for FiberSettings {
    fn default() -> Self {
        Self { diameter: 0.015, aspect: AspectMode::ZhangEquivalent }
    }
}

/// Model settings; the shape factor follows from the fiber length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FomSettings {
    pub model: FomModel,
    pub c_i: f64,
    pub c_m: f64,
    pub closure: ClosureKind,
}

impl Default for FomSettings {
    fn default() -> Self {
        Self { model: FomModel::Fte, c_i: 0.01, c_m: 0.2, closure: ClosureKind::Hybrid(1.0) }
    }
}

impl FomSettings {
    pub fn with_xi(&self, xi: f64) -> FomConfig {
        FomConfig { model: self.model, xi, c_i: self.c_i, c_m: self.c_m, closure: self.closure }
    }
}

/// Ranges of the uncertain inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainSettings {
    /// K
    pub temperature: [f64; 2],
    /// mm
    pub fiber_length: [f64; 2],
}

impl Default for DomainSettings {
    fn default() -> Self {
        Self { temperature: [550.0, 580.0], fiber_length: [0.19, 0.57] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocationSettings {
    /// Material point (x, y) in mm, used unless `full_channel` is set.
    pub point: [f64; 2],
    /// Treat the channel coordinates as two more surrogate inputs.
    pub full_channel: bool,
}

impl Default for LocationSettings {
    fn default() -> Self {
        Self { point: [2.0, 0.1], full_channel: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    /// s
    pub t_end: f64,
    pub stabilize: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { t_end: 300.0, stabilize: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub viscosity: CrossWlfParams,
    pub channel: ChannelGeometry,
    pub fiber: FiberSettings,
    pub fom: FomSettings,
    pub domain: DomainSettings,
    pub location: LocationSettings,
    pub solver: SolverSettings,
}

impl ProblemConfig {
    /// Material-point problem with the given model.
    pub fn point(model: FomModel) -> Self {
        let mut c = Self::default();
        c.fom.model = model;
        c
    }

    /// Whole-channel problem: four inputs and a 200 s horizon.
    pub fn full_channel() -> Self {
        let mut c = Self::default();
        c.location.full_channel = true;
        c.solver.t_end = 200.0;
        c
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let c: Self = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.viscosity.validate()?;
        self.channel.validate()?;
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        let [t0, t1] = self.domain.temperature;
        let [l0, l1] = self.domain.fiber_length;
        if !(t0 < t1) || !(l0 < l1) {
            return bad("domain bounds must satisfy low < high");
        }
        if t0 <= self.viscosity.t_star {
            return Err(ModelError::BelowGlassTransition(t0, self.viscosity.t_star).into());
        }
        if !(l0 > 0.0) || !(self.fiber.diameter > 0.0) {
            return bad("fiber length and diameter must be positive");
        }
        if !(self.solver.t_end > 0.0) {
            return bad("t_end must be positive");
        }
        let [x, y] = self.location.point;
        let inside = (0.0..=self.channel.width).contains(&x) && (0.0..=self.channel.height).contains(&y);
        if !self.location.full_channel && !inside {
            return Err(ModelError::OutsideChannel(x, y).into());
        }
        self.fom.with_xi(0.0).validate()?;
        Ok(())
    }

    /// Canonical JSON form: object keys sorted, so the hash ignores field order.
    pub fn canonical_json(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&sort_keys(v)).expect("json serializes")
    }

    pub fn fingerprint(&self) -> String {
        crate::stats::ReferenceCache::key(&self.canonical_json())
    }
}

/// Recursively sorts object keys.
pub fn sort_keys(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Object(m) => {
            let mut entries: Vec<(String, Value)> = m.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sort_keys(v))).collect())
        }
        Value::Array(a) => Value::Array(a.into_iter().map(sort_keys).collect()),
        other => other,
    }
}
