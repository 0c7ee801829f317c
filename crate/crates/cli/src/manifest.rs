//! `manifest.json`, written next to every output set.

use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use tileprop::pipeline::GridMode;
use tileprop::{DetectorProfile, SceneSpec};

use crate::CliError;

pub const TOOL: &str = "tileprop";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything that determines the output bytes.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum RunConfig {
    Synth {
        count: u32,
        seed: u64,
        scene: SceneSpec,
    },
    Run {
        source: String,
        detector: Option<DetectorProfile>,
        grid: GridMode,
        nms_iou: f64,
        top_k: usize,
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub config: RunConfig,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(config: RunConfig, inputs: Vec<String>, outputs: Vec<String>) -> Self {
        let canonical = serde_json::to_string(&config).expect("config serializes");
        let config_hash = hex::encode(Sha256::digest(canonical.as_bytes()));
        Self {
            tool: TOOL,
            version: VERSION,
            config_hash,
            config,
            inputs,
            outputs,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        let path = dir.join("manifest.json");
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}

/// Reads the `system` label a `run` manifest implies, if there is one.
pub fn system_label(dir: &Path) -> Option<String> {
    let text = fs::read_to_string(dir.join("manifest.json")).ok()?;
    let v: serde_json::Value = serde_json::from_str(&text).ok()?;
    let cfg = v.get("config")?;
    let source = cfg.get("source")?.as_str()?;
    let mode = cfg.get("grid")?.get("mode")?.as_str()?;
    Some(format!("{source}/{mode}"))
}
