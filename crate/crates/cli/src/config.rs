//! Merging of command-line flags over an optional JSON config file.
//!
//! The file is a JSON object with snake_case keys matching the long flag
//! names. Keys at the top level apply to every command; an object stored
//! under a command name (e.g. `"fit": {...}`) applies to that command only.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

/// A cap value that may be infinite; written as `inf` on the command line
/// and as the string `"inf"` in JSON.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cap(pub f64);

impl Default for Cap {
    fn default() -> Self {
        Cap(f64::INFINITY)
    }
}

impl FromStr for Cap {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.trim().parse::<f64>().map(Cap).map_err(|_| format!("not a number or `inf`: {s:?}"))
    }
}

impl Serialize for Cap {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&self.0.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for Cap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Cap(v)),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

pub fn read_config_file(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config file {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("config file {} is not valid JSON: {e}", path.display())))?;
    if !value.is_object() {
        return Err(CliError::usage("config file must contain a JSON object"));
    }
    Ok(value)
}

/// Resolves the configuration of `command`: file values, then
/// command-specific file section, then flags that were actually given.
pub fn resolve<A: Serialize, C: DeserializeOwned>(command: &str, flags: &A, file: Option<&Value>) -> CliResult<C> {
    let mut merged = Map::new();
    if let Some(Value::Object(top)) = file {
        for (k, v) in top {
            if !v.is_object() {
                merged.insert(k.clone(), v.clone());
            }
        }
        if let Some(Value::Object(section)) = top.get(command) {
            merged.extend(section.clone());
        }
    }
    let flags = serde_json::to_value(flags).map_err(CliError::usage)?;
    if let Value::Object(flags) = flags {
        for (k, v) in flags {
            // unset options and switches that were not passed leave file values alone
            if !matches!(v, Value::Null | Value::Bool(false)) {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::usage(format!("invalid {command} configuration: {e}")))
}

/// Prints the resolved configuration to stderr.
pub fn echo<C: Serialize>(command: &str, cfg: &C) {
    match serde_json::to_string(cfg) {
        Ok(json) => eprintln!("hqnet {command} config: {json}"),
        Err(e) => eprintln!("hqnet {command} config: <unprintable: {e}>"),
    }
}

pub fn require<T>(value: Option<T>, key: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::usage(format!("missing required option --{} (or `{key}` in the config file)", key.replace('_', "-"))))
}

/// `dir/name.ext` -> `dir/name_tau0.4.ext`
pub fn with_level(path: &Path, tau: f64) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_tau{tau}.{}", ext.to_string_lossy()),
        None => format!("{stem}_tau{tau}"),
    };
    path.with_file_name(name)
}

/// `dir/name.json` -> `dir/name.report.csv`
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}
