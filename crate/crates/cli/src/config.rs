//! Experiment configurations. Each subcommand reads its own JSON document;
//! unknown fields are rejected and parse errors carry line and column.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use tracelab_core::kernels::KernelCheckGrid;
use tracelab_core::rate_lab::SecondOrderKind;
use tracelab_core::{ContinuousTheorem, DiscreteTheorem, SpectralDensity};

use crate::error::CliError;

/// A density given inline or as the path of a JSON file holding one,
/// resolved relative to the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ModelRef {
    Inline(SpectralDensity),
    File(PathBuf),
}

impl<'de> Deserialize<'de> for ModelRef {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RefVisitor;

        impl<'de> Visitor<'de> for RefVisitor {
            type Value = ModelRef;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a density object or the path of a density JSON file")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<ModelRef, E> {
                Ok(ModelRef::File(PathBuf::from(v)))
            }

            fn visit_map<A: MapAccess<'de>>(self, map: A) -> Result<ModelRef, A::Error> {
                SpectralDensity::deserialize(de::value::MapAccessDeserializer::new(map)).map(ModelRef::Inline)
            }
        }

        deserializer.deserialize_any(RefVisitor)
    }
}

impl ModelRef {
    pub fn resolve(&self, base: &Path) -> Result<SpectralDensity, CliError> {
        match self {
            ModelRef::Inline(d) => Ok(d.clone()),
            ModelRef::File(p) => {
                let path = if p.is_absolute() { p.clone() } else { base.join(p) };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Config(format!("cannot read model file {}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
            }
        }
    }
}

/// Where and under which name the artifacts go.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub prefix: Option<String>,
}

/// Numerical settings a configuration may override.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default)]
    pub nystrom_rel_tol: Option<f64>,
    #[serde(default)]
    pub nystrom_initial_nodes: Option<usize>,
    #[serde(default)]
    pub nystrom_max_nodes: Option<usize>,
}

/// Theorem hypothesis for a rate experiment; the two families have
/// disjoint names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Theorem {
    Discrete(DiscreteTheorem),
    Continuous(ContinuousTheorem),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceApproxConfig {
    #[serde(default)]
    pub experiment: Option<String>,
    pub models: Vec<ModelRef>,
    /// ±1 per model; all +1 when omitted.
    #[serde(default)]
    pub exponents: Option<Vec<i32>>,
    pub grid: Vec<f64>,
    #[serde(default)]
    pub output: Option<OutputConfig>,
    #[serde(default)]
    pub tolerances: Option<ToleranceOverrides>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateFitConfig {
    #[serde(default)]
    pub experiment: Option<String>,
    pub model_id: String,
    pub models: Vec<ModelRef>,
    #[serde(default)]
    pub exponents: Option<Vec<i32>>,
    /// Defaults to the dyadic grid for matrices and 25·2^k for operators.
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    pub theorem: Theorem,
    #[serde(default)]
    pub output: Option<OutputConfig>,
    #[serde(default)]
    pub tolerances: Option<ToleranceOverrides>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecondOrderConfig {
    #[serde(default)]
    pub experiment: Option<String>,
    pub expansion: SecondOrderKind,
    pub grid: Vec<f64>,
    #[serde(default)]
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BerryEsseenConfig {
    pub grid: Vec<usize>,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CltSimConfig {
    #[serde(default)]
    pub experiment: Option<String>,
    pub f: ModelRef,
    pub g: ModelRef,
    /// Number of observations on the circle, length of [0, T] on the line.
    pub horizon: f64,
    /// Riemann-sum points on the line.
    #[serde(default)]
    pub samples: Option<usize>,
    pub replicates: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Simulate even when no sufficient condition can be established.
    #[serde(default)]
    pub force: bool,
    #[serde(default)]
    pub berry_esseen: Option<BerryEsseenConfig>,
    #[serde(default)]
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdpConfig {
    #[serde(default)]
    pub experiment: Option<String>,
    pub f: ModelRef,
    pub g: ModelRef,
    pub x: Vec<f64>,
    #[serde(default)]
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct KernelCheckConfig {
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default)]
    pub grid: KernelCheckGrid,
    #[serde(default)]
    pub output: Option<OutputConfig>,
}

/// Reads and parses a configuration file. The experiment name, when given,
/// must match the subcommand.
pub fn load<T: for<'de> Deserialize<'de>>(path: &Path, expected: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text, expected).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str, expected: &str) -> Result<T, CliError> {
    let value: T = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    // a second, untyped pass only to compare the optional experiment tag
    let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(name) = raw.get("experiment").and_then(|v| v.as_str()) {
        if name.replace('_', "-") != expected {
            return Err(CliError::Config(format!("configuration is for experiment {name:?}, not {expected:?}")));
        }
    }
    Ok(value)
}

/// Integer horizons for matrix experiments.
pub fn integer_grid(grid: &[f64]) -> Result<Vec<usize>, CliError> {
    grid.iter()
        .map(|&t| {
            if t >= 1.0 && t.fract() == 0.0 && t <= usize::MAX as f64 {
                Ok(t as usize)
            } else {
                Err(CliError::Config(format!("matrix dimension {t} is not a positive integer")))
            }
        })
        .collect()
}
