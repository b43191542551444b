//! Defaults file named by `PTOB_CONFIG`. Every section is optional; command
//! flags and explicit input files take precedence.

use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use ptob_core::chassis::ChassisConfig;
use ptob_core::geometry::WheelGeometry;
use ptob_core::simulate::RunScenario;
use ptob_core::stepclimb::{HookSolver, StepScenario};

pub const CONFIG_ENV: &str = "PTOB_CONFIG";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub geom: Option<WheelGeometry>,
    pub chassis: Option<ChassisConfig>,
    pub solver: Option<HookSolver>,
    pub step: Option<StepScenario>,
    pub run: Option<RunScenario>,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

impl Config {
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => read_json(Path::new(&p)).context(CONFIG_ENV),
            _ => Ok(Self::default()),
        }
    }

    pub fn geometry(&self, path: Option<&Path>) -> Result<WheelGeometry> {
        match path {
            Some(p) => read_json(p),
            None => Ok(self.geom.unwrap_or_else(WheelGeometry::prototype)),
        }
    }

    pub fn chassis(&self, path: Option<&Path>) -> Result<ChassisConfig> {
        match path {
            Some(p) => read_json(p),
            None => Ok(self.chassis.clone().unwrap_or_else(|| ChassisConfig {
                geom: self.geometry(None).unwrap_or_else(|_| WheelGeometry::prototype()),
                ..ChassisConfig::default()
            })),
        }
    }

    pub fn run_scenario(&self) -> Result<RunScenario> {
        match &self.run {
            Some(r) => Ok(r.clone()),
            None => Ok(RunScenario {
                chassis: self.chassis(None)?,
                ..RunScenario::default()
            }),
        }
    }
}
