//! Layering of configuration: defaults, then flags, then `--config`.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{io_at, CliError, CliResult};
use crate::manifest::to_value;

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Apply the JSON object in `file` on top of `flags`.
///
/// The file is either a bare configuration object or a run manifest, in
/// which case its `config` member is used and its subcommand must match.
/// Keys present in the file win over flags; unknown keys are rejected.
pub fn resolve<T: Serialize + DeserializeOwned>(flags: T, file: Option<&Path>, subcommand: &str) -> CliResult<T> {
    let Some(path) = file else { return Ok(flags) };
    let text = fs::read_to_string(path).map_err(|e| io_at(path, e))?;
    let shown = path.display().to_string();
    let mut over: Value = serde_json::from_str(&text).map_err(|source| CliError::Json { path: shown.clone(), source })?;
    if let Some(obj) = over.as_object_mut() {
        if let (Some(cmd), Some(_)) = (obj.get("subcommand").cloned(), obj.get("config")) {
            if cmd.as_str() != Some(subcommand) {
                return Err(CliError::invalid(format!("{shown} is a manifest for `{cmd}`, not `{subcommand}`")));
            }
            over = obj.remove("config").unwrap_or(Value::Null);
        }
    }
    if !over.is_object() {
        return Err(CliError::invalid(format!("{shown}: configuration must be a JSON object")));
    }
    let mut base = to_value(&flags)?;
    merge(&mut base, over);
    serde_json::from_value(base).map_err(|e| CliError::invalid(format!("{shown}: {e}")))
}
