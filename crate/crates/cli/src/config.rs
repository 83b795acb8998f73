//! JSON run configurations, one shape per `verify` check.

use std::path::Path;

use bihari::bounds::{HCase, IncreasingProcess, Variant};
use bihari::levy::LevyConfig;
use bihari::montecarlo::{IntegratorSpec, QuadrupleConfig};
use bihari::sde::ModelSpec;
use bihari::EtaSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Version of the JSON config layout accepted by this binary.
pub const CONFIG_SCHEMA_VERSION: u32 = 1;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text).map_err(|msg| CliError::Usage(format!("{}: {msg}", path.display())))
}

/// Parses JSON, naming the offending key path on failure.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        let at = if at == "." { "<root>".to_string() } else { at };
        format!("config error at `{at}`: {}", e.inner())
    })
}

fn unit_quadruple() -> QuadrupleConfig {
    QuadrupleConfig::new(
        EtaSpec::identity(),
        IntegratorSpec::deterministic(IncreasingProcess::linear(1.0)),
        1.0,
        0.5,
        256,
        1.0,
    )
}

fn half() -> f64 {
    0.5
}

fn predictable() -> HCase {
    HCase::Predictable
}

fn sup() -> Variant {
    Variant::Sup
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcaveCheck {
    #[serde(default = "unit_quadruple")]
    pub quadruple: QuadrupleConfig,
    #[serde(default = "half")]
    pub p: f64,
    #[serde(default = "predictable")]
    pub hcase: HCase,
    #[serde(default = "sup")]
    pub variant: Variant,
}

impl Default for ConcaveCheck {
    fn default() -> Self {
        ConcaveCheck { quadruple: unit_quadruple(), p: 0.5, hcase: HCase::Predictable, variant: Variant::Sup }
    }
}

fn random_quadruple() -> QuadrupleConfig {
    QuadrupleConfig {
        a: IntegratorSpec::RandomScale { values: vec![0.5, 2.0], probs: vec![0.5, 0.5] },
        ..unit_quadruple()
    }
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomIntegratorCheck {
    #[serde(default = "random_quadruple")]
    pub quadruple: QuadrupleConfig,
    #[serde(default = "half")]
    pub p: f64,
    #[serde(default = "unit")]
    pub q: f64,
    #[serde(default = "predictable")]
    pub hcase: HCase,
    #[serde(default = "sup")]
    pub variant: Variant,
}

impl Default for RandomIntegratorCheck {
    fn default() -> Self {
        RandomIntegratorCheck {
            quadruple: random_quadruple(),
            p: 0.5,
            q: 1.0,
            hcase: HCase::Predictable,
            variant: Variant::Sup,
        }
    }
}

fn floored_quadruple() -> QuadrupleConfig {
    unit_quadruple().with_floor(1.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralEtaCheck {
    #[serde(default = "floored_quadruple")]
    pub quadruple: QuadrupleConfig,
    #[serde(default = "half")]
    pub p: f64,
}

impl Default for GeneralEtaCheck {
    fn default() -> Self {
        GeneralEtaCheck { quadruple: floored_quadruple(), p: 0.5 }
    }
}

fn default_ladder() -> Vec<u32> {
    vec![1, 10, 100]
}

fn default_delta() -> f64 {
    0.01
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OsgoodCheck {
    #[serde(default = "unit_quadruple")]
    pub quadruple: QuadrupleConfig,
    #[serde(default = "default_ladder")]
    pub ladder: Vec<u32>,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

impl Default for OsgoodCheck {
    fn default() -> Self {
        OsgoodCheck { quadruple: unit_quadruple(), ladder: default_ladder(), delta: default_delta() }
    }
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleCheck {
    #[serde(default = "half")]
    pub p: f64,
    #[serde(default = "unit")]
    pub gamma: f64,
    #[serde(default = "two", rename = "T")]
    pub t_end: f64,
}

impl Default for CounterexampleCheck {
    fn default() -> Self {
        CounterexampleCheck { p: 0.5, gamma: 1.0, t_end: 2.0 }
    }
}

fn delay_preset() -> ModelSpec {
    ModelSpec::DelayPreset { z0: 1.0 }
}

fn default_n_list() -> Vec<u32> {
    vec![16, 64, 256]
}

fn default_eps() -> f64 {
    0.1
}

/// Model plus driving noise; `levy` falls back to the model's default noise.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CauchyCheck {
    #[serde(default = "delay_preset")]
    pub model: ModelSpec,
    #[serde(default)]
    pub levy: Option<LevyConfig>,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<u32>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "unit", rename = "T")]
    pub t_end: f64,
}

impl Default for CauchyCheck {
    fn default() -> Self {
        CauchyCheck { model: delay_preset(), levy: None, n_list: default_n_list(), eps: default_eps(), t_end: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "delay_preset")]
    pub model: ModelSpec,
    #[serde(default)]
    pub levy: Option<LevyConfig>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { model: delay_preset(), levy: None }
    }
}

pub fn levy_or_default(model: &ModelSpec, levy: &Option<LevyConfig>) -> LevyConfig {
    levy.clone().unwrap_or_else(|| model.default_levy())
}

pub fn load_or_default<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    path.map_or_else(|| Ok(T::default()), load)
}
