// SPDX-License-Identifier: Apache-2.0

//! Run configuration. Layers are merged over design-dependent defaults:
//! defaults, then an optional saved run config, then the `key = value`
//! file, then command-line flags.

use std::path::Path;

use placerl_core::env::{Design, EnvConfig};
use placerl_learn::agent::Squash;
use placerl_learn::trainer::{TrainMode, TrainerConfig};
use placerl_learn::{ActionSpace, NetworkConfig};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{config_err, ConfigError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Master seed; copied into every sub-seed unless one is set explicitly.
    pub seed: u64,
    pub action: ActionSpace,
    /// Network arithmetic.
    pub precision: Precision,
    pub env: EnvConfig<f64>,
    pub trainer: TrainerConfig,
    /// Input shape, action grid and action space are derived from `env`
    /// and `action`.
    pub network: NetworkConfig,
    pub squash: Squash,
    /// AddNode, AddNet, RemoveNode probabilities for netlist edits.
    pub edit_weights: [f64; 3],
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            action: ActionSpace::DensityWeight,
            precision: Precision::F32,
            env: EnvConfig::default(),
            trainer: TrainerConfig::default(),
            network: NetworkConfig::default(),
            squash: Squash::default(),
            edit_weights: [1.0 / 3.0; 3],
        }
    }
}

impl RunConfig {
    pub fn defaults(design: Option<&Design<f64>>, seed: u64) -> Self {
        let mut c = RunConfig {
            seed,
            env: design.map(EnvConfig::for_design).unwrap_or_default(),
            ..Self::default()
        };
        c.env.placer.seed = seed;
        c.trainer.seed = seed;
        c.network.init_seed = seed;
        c
    }

    /// Fills derived fields and checks ranges.
    fn finish(mut self) -> Result<Self, ConfigError> {
        let f = &self.env.features;
        self.network.in_channels = f.channels();
        self.network.height = f.height;
        self.network.width = f.width;
        self.network.action_grid = self.env.action_grid;
        self.network.action_space = self.action;
        if self.trainer.num_workers > 1 {
            self.trainer.mode = TrainMode::Async;
        }
        self.env.placer.validate().map_err(|e| ConfigError(e.to_string()))?;
        self.trainer.validate().map_err(|e| ConfigError(e.to_string()))?;
        if f.height == 0 || f.width == 0 || f.local_levels.iter().any(|&l| l == 0) {
            return Err(ConfigError("feature grid and local levels must be positive".into()));
        }
        let a = self.env.action_grid;
        if a == 0 || f.height % a != 0 || f.width % a != 0 {
            return Err(ConfigError(format!("action_grid {a} must divide the {}x{} feature grid", f.height, f.width)));
        }
        if self.env.block_iterations == 0 {
            return Err(ConfigError("block_iterations must be at least 1".into()));
        }
        Ok(self)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }
}

/// Parses a `key = value` file. Dotted keys address nested fields, e.g.
/// `env.placer.grid_dims = 64`.
pub fn parse_config_text(text: &str) -> anyhow::Result<Value> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| config_err(format!("config: {e}")))?;
    Ok(serde_json::to_value(table)?)
}

pub fn read_config_file(path: &Path) -> anyhow::Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    parse_config_text(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

/// One `key=value` override. Values that are not valid TOML are taken as
/// strings, so `action=spatial` works unquoted.
pub fn parse_assignment(s: &str) -> anyhow::Result<Value> {
    let (key, value) = s
        .split_once('=')
        .ok_or_else(|| config_err(format!("expected key=value, got {s:?}")))?;
    let (key, value) = (key.trim(), value.trim());
    if key.is_empty() {
        return Err(config_err(format!("empty key in {s:?}")));
    }
    let doc = format!("{key} = {value}");
    match parse_config_text(&doc) {
        Ok(v) => Ok(v),
        Err(_) => parse_config_text(&format!("{key} = {}", Value::String(value.into()))),
    }
}

/// Sets a dotted path in a JSON object tree.
pub fn set_path(root: &mut Value, path: &str, value: Value) {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for p in &parts[..parts.len() - 1] {
        if !cur.is_object() {
            *cur = Value::Object(Map::new());
        }
        cur = cur.as_object_mut().unwrap().entry(p.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    if !cur.is_object() {
        *cur = Value::Object(Map::new());
    }
    cur.as_object_mut().unwrap().insert(parts[parts.len() - 1].to_string(), value);
}

fn merge(base: &mut Value, layer: &Value, path: &str) -> Result<(), ConfigError> {
    let Some(layer) = layer.as_object() else {
        *base = layer.clone();
        return Ok(());
    };
    let Some(obj) = base.as_object_mut() else {
        return Err(ConfigError(format!("{path} is not a section")));
    };
    let tagged = obj.contains_key("kind");
    for (k, v) in layer {
        let key = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
        match obj.get_mut(k) {
            Some(slot) if slot.is_object() && v.is_object() => merge(slot, v, &key)?,
            Some(slot) => *slot = v.clone(),
            // tagged enums grow variant fields that are absent from the default
            None if tagged => {
                obj.insert(k.clone(), v.clone());
            }
            None => return Err(ConfigError(format!("unknown config key {key}"))),
        }
    }
    Ok(())
}

/// Merges `layers` (lowest precedence first) over the defaults for `design`.
pub fn resolve(design: Option<&Design<f64>>, layers: &[Value]) -> anyhow::Result<RunConfig> {
    let seed = match layers.iter().rev().find_map(|l| l.get("seed")) {
        None => 0,
        Some(v) => v.as_u64().ok_or_else(|| config_err("seed must be a non-negative integer"))?,
    };
    let mut value = serde_json::to_value(RunConfig::defaults(design, seed))?;
    for layer in layers {
        merge(&mut value, layer, "")?;
    }
    let cfg: RunConfig = serde_json::from_value(value).map_err(|e| config_err(format!("config: {e}")))?;
    Ok(cfg.finish()?)
}
