//! Run manifests and JSON output helpers.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::error::{io_at, CliError, CliResult};

/// Record of one invocation, written next to its outputs.
///
/// `config` is the fully resolved configuration; passing the manifest back
/// through `--config` reproduces the run. `wall_clock` is only present with
/// `--timestamp`, so manifests are byte-stable by default.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub config: Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub items: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock: Option<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: Option<u64>, config: &impl Serialize) -> CliResult<Self> {
        Ok(Self {
            subcommand: subcommand.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config: to_value(config)?,
            inputs: Vec::new(),
            outputs: Vec::new(),
            items: None,
            wall_clock: None,
        })
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn stamp(&mut self) {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        self.wall_clock = Some(format!("unix:{secs}"));
    }
}

pub fn to_value(v: &impl Serialize) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| CliError::invalid(format!("cannot encode configuration: {e}")))
}

/// Pretty JSON with a trailing newline.
pub fn to_json(v: &impl Serialize) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::invalid(format!("cannot encode report: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json(path: &Path, v: &impl Serialize) -> CliResult<()> {
    write_file(path, to_json(v)?.as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| io_at(path, e))
}

/// `<file>.manifest.json` next to a primary output file.
pub fn beside(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}
