//! TOML configuration file: every field optional, merged onto the built-in
//! defaults before command-line flags are applied on top.

use crate::{ctx, CliError};
use serde::Deserialize;
use std::path::Path;
use swarmlink_core::SimConfig;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub sim: SimTable,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimTable {
    pub dt: Option<f64>,
    pub max_t: Option<f64>,
    pub collision_radius: Option<f64>,
    pub goal_tol: Option<f64>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub apf: ApfTable,
    #[serde(default)]
    pub deflection: DeflectionTable,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApfTable {
    pub k_att: Option<f64>,
    pub k_rep: Option<f64>,
    pub rho0: Option<f64>,
    pub cap: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeflectionTable {
    pub r_imp: Option<f64>,
    pub k_imp_f: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(FileConfig::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(ctx(format_args!("reading config {}", path.display())))?;
        toml::from_str(&text).map_err(ctx(format_args!("parsing config {}", path.display())))
    }

    /// Defaults overlaid with the file; flags are applied by the caller.
    pub fn sim_config(&self) -> SimConfig {
        let mut cfg = SimConfig::default();
        let sim = &self.sim;
        if let Some(v) = sim.dt {
            cfg.dt = v;
        }
        if let Some(v) = sim.max_t {
            cfg.max_t = v;
        }
        if let Some(v) = sim.collision_radius {
            cfg.collision_radius = v;
        }
        if let Some(v) = sim.goal_tol {
            cfg.goal_tol = v;
        }
        if let Some(v) = sim.seed {
            cfg.seed = v;
        }
        if let Some(v) = sim.apf.k_att {
            cfg.apf.k_att = v;
        }
        if let Some(v) = sim.apf.k_rep {
            cfg.apf.k_rep = v;
        }
        if let Some(v) = sim.apf.rho0 {
            cfg.apf.rho0 = v;
        }
        if let Some(v) = sim.apf.cap {
            cfg.apf.cap = v;
        }
        if let Some(v) = sim.deflection.r_imp {
            cfg.deflection.r_imp = v;
        }
        if let Some(v) = sim.deflection.k_imp_f {
            cfg.deflection.k_imp_f = v;
        }
        cfg
    }
}
