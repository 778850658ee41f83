use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::one_d::{
    BornConvergenceConfig, FreeBaselineConfig, JostResidualsConfig, OracleEquivalenceConfig, ResonanceScanConfig,
    Theorem1SweepConfig, WienerTablesConfig,
};
use super::three_d::{HsNormTableConfig, KatoBoundConfig, OscillatoryDecayConfig, S0ResonanceConfig};
use super::{Context, Experiment, Outcome, RunError};
use crate::potentials::{Dimension, Potential, PotentialConfig};

pub const SCHEMA_VERSION: u64 = 1;

/// Behaviour shared by the per-experiment parameter blocks.
pub(crate) trait ExperimentConfig: Serialize + DeserializeOwned + Default {
    /// Semantic checks beyond the schema; errors carry a field path.
    fn validate(&self, base: &Path) -> Result<(), RunError>;
    fn run(&self, ctx: &Context) -> Result<Outcome, RunError>;
}

/// A potential with a label used in tables and verdict names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedPotential {
    pub name: String,
    pub potential: PotentialConfig,
}

impl NamedPotential {
    pub fn new(name: &str, potential: PotentialConfig) -> Self {
        Self { name: name.to_string(), potential }
    }

    /// Builds the potential, mapping failures to a schema error at `path`.
    pub fn build(&self, base: &Path, dim: Dimension, path: &str) -> Result<Potential<f64>, RunError> {
        let v = self
            .potential
            .build(Some(base))
            .map_err(|e| RunError::schema(format!("{path}.potential"), e.to_string()))?;
        if v.dimension != dim {
            return Err(RunError::schema(
                format!("{path}.potential.dimension"),
                format!("this experiment needs dimension {}", if dim == Dimension::One { 1 } else { 3 }),
            ));
        }
        Ok(v)
    }
}

pub(crate) fn build_all(list: &[NamedPotential], base: &Path, dim: Dimension, key: &str) -> Result<Vec<Potential<f64>>, RunError> {
    if list.is_empty() {
        return Err(RunError::schema(key, "needs at least one potential"));
    }
    list.iter().enumerate().map(|(i, p)| p.build(base, dim, &format!("{key}[{i}]"))).collect()
}

/// Field-path checks used by the validators.
pub(crate) fn require(ok: bool, path: &str, message: &str) -> Result<(), RunError> {
    if ok {
        Ok(())
    } else {
        Err(RunError::schema(path, message))
    }
}

pub(crate) fn require_positive(values: &[f64], path: &str) -> Result<(), RunError> {
    require(!values.is_empty(), path, "must not be empty")?;
    for (i, v) in values.iter().enumerate() {
        require(v.is_finite() && *v > 0.0, &format!("{path}[{i}]"), "must be positive and finite")?;
    }
    Ok(())
}

pub(crate) fn require_finite(values: &[f64], path: &str) -> Result<(), RunError> {
    require(!values.is_empty(), path, "must not be empty")?;
    for (i, v) in values.iter().enumerate() {
        require(v.is_finite(), &format!("{path}[{i}]"), "must be finite")?;
    }
    Ok(())
}

macro_rules! params {
    ($($variant:ident($ty:ty)),* $(,)?) => {
        /// Parsed parameters of one experiment.
        #[derive(Debug, Clone)]
        pub enum Params {
            $($variant($ty)),*
        }

        impl Params {
            pub fn default_for(e: Experiment) -> Self {
                match e {
                    $(Experiment::$variant => Params::$variant(<$ty>::default())),*
                }
            }

            pub fn parse(e: Experiment, value: Value, base: &Path) -> Result<Self, RunError> {
                match e {
                    $(Experiment::$variant => {
                        let p: $ty = parse_block(value)?;
                        p.validate(base)?;
                        Ok(Params::$variant(p))
                    }),*
                }
            }

            pub fn to_value(&self) -> Value {
                match self {
                    $(Params::$variant(p) => serde_json::to_value(p).expect("parameters serialise")),*
                }
            }

            pub fn run(&self, ctx: &Context) -> Result<Outcome, RunError> {
                match self {
                    $(Params::$variant(p) => p.run(ctx)),*
                }
            }
        }
    };
}

params! {
    FreeBaseline(FreeBaselineConfig),
    OracleEquivalence(OracleEquivalenceConfig),
    Theorem1Sweep(Theorem1SweepConfig),
    ResonanceScan(ResonanceScanConfig),
    JostResiduals(JostResidualsConfig),
    BornConvergence(BornConvergenceConfig),
    WienerTables(WienerTablesConfig),
    HsNormTable(HsNormTableConfig),
    KatoBound(KatoBoundConfig),
    OscillatoryDecay(OscillatoryDecayConfig),
    S0Resonance(S0ResonanceConfig),
}

fn parse_block<T: DeserializeOwned>(value: Value) -> Result<T, RunError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "config".to_string() } else { path };
        RunError::schema(path, e.into_inner().to_string())
    })
}

/// A validated config file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: Option<u64>,
    pub params: Params,
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::schema(path.display().to_string(), format!("cannot read config: {e}")))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str(&text, &base)
    }

    pub fn from_str(text: &str, base: &Path) -> Result<Self, RunError> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| RunError::schema("config", format!("malformed JSON: {e}")))?;
        let Value::Object(mut map) = value else {
            return Err(RunError::schema("config", "top level must be a JSON object"));
        };
        let experiment = match map.remove("experiment") {
            Some(Value::String(s)) => Experiment::from_name(&s).ok_or_else(|| {
                let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
                RunError::schema("experiment", format!("unknown experiment '{s}'; expected one of {}", names.join(", ")))
            })?,
            Some(_) => return Err(RunError::schema("experiment", "must be a string")),
            None => return Err(RunError::schema("experiment", "missing required key")),
        };
        match map.remove("schema_version") {
            None => {}
            Some(Value::Number(n)) if n.as_u64() == Some(SCHEMA_VERSION) => {}
            Some(other) => {
                return Err(RunError::schema("schema_version", format!("unsupported version {other}; this build reads {SCHEMA_VERSION}")))
            }
        }
        let seed = match map.remove("seed") {
            None => None,
            Some(Value::Number(n)) if n.as_u64().is_some() => n.as_u64(),
            Some(_) => return Err(RunError::schema("seed", "must be a non-negative integer")),
        };
        let params = Params::parse(experiment, Value::Object(map), base)?;
        Ok(Self { experiment, seed, params, base_dir: base.to_path_buf() })
    }
}
