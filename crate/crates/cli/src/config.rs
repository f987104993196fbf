//! Flag / config-file / default resolution.
//!
//! A config file is a flat JSON object whose keys are long flag names
//! (`"epochs": 40`, `"encoding": "binary"`). A run manifest written by an
//! earlier invocation is accepted too; its `config` object is used.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::failure::Failure;

#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    resolved: Map<String, Value>,
}

impl Settings {
    /// Loads `path` (if any) and rejects keys the command does not know.
    pub fn load(path: Option<&Path>, known: &[&str]) -> Result<Settings, Failure> {
        let Some(path) = path else {
            return Ok(Settings::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let mut object = match value {
            Value::Object(m) => m,
            _ => return Err(Failure::usage(format!("{}: expected a JSON object", path.display()))),
        };
        if object.contains_key("tool_version") {
            object = match object.remove("config") {
                Some(Value::Object(m)) => m,
                _ => return Err(Failure::usage(format!("{}: manifest has no config object", path.display()))),
            };
        }
        let mut file = BTreeMap::new();
        for (k, v) in object {
            if !known.contains(&k.as_str()) {
                return Err(Failure::usage(format!(
                    "{}: unknown key {k:?} (known: {})",
                    path.display(),
                    known.join(", ")
                )));
            }
            let s = match v {
                Value::String(s) => s,
                Value::Number(n) => n.to_string(),
                Value::Bool(b) => b.to_string(),
                Value::Null => continue,
                other => return Err(Failure::usage(format!("{}: key {k:?} must be a scalar, got {other}", path.display()))),
            };
            file.insert(k, s);
        }
        Ok(Settings {
            file,
            resolved: Map::new(),
        })
    }

    /// Flag value, else config file value, else `fallback`. The chosen value
    /// is recorded for the run manifest.
    pub fn get<T>(&mut self, key: &str, flag: Option<T>, fallback: impl FnOnce() -> T) -> Result<T, Failure>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(s) => s.parse().map_err(|e| Failure::usage(format!("config key {key:?}: {e}")))?,
                None => fallback(),
            },
        };
        self.resolved.insert(key.to_string(), Value::String(value.to_string()));
        Ok(value)
    }

    /// Like [`Settings::get`] with no fallback: `None` when neither source sets it.
    pub fn get_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, Failure>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        if flag.is_none() && !self.file.contains_key(key) {
            return Ok(None);
        }
        self.get(key, flag, || unreachable!("checked above")).map(Some)
    }

    /// Like [`Settings::get`] but the value is required.
    pub fn require<T>(&mut self, key: &str, flag: Option<T>) -> Result<T, Failure>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.get_opt(key, flag)?
            .ok_or_else(|| Failure::usage(format!("--{key} is required (as a flag or config key)")))
    }

    /// Boolean switch: set by the flag, or by a `true` config value.
    pub fn switch(&mut self, key: &str, flag: bool) -> Result<bool, Failure> {
        let on = if flag { Some(true) } else { None };
        self.get(key, on, || false)
    }

    /// Every resolved value, as flat string-valued JSON.
    pub fn resolved(&self) -> Value {
        Value::Object(self.resolved.clone())
    }
}

/// Default seed: `CBL_SEED` when set, else 0.
pub fn default_seed() -> Result<u64, Failure> {
    match std::env::var("CBL_SEED") {
        Ok(s) => s.parse().map_err(|e| Failure::usage(format!("CBL_SEED={s:?}: {e}"))),
        Err(_) => Ok(0),
    }
}
