//! `key = value` config files and flag/config/default resolution.
//!
//! Keys are the long flag names of the subcommand. Explicit flags win over
//! the file, which wins over built-in defaults. Every resolved value is
//! recorded so it can be echoed into the metadata sidecar.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::Failure;

pub fn parse_config(text: &str, allowed: &[String]) -> Result<BTreeMap<String, String>, Failure> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("config line {}: expected key = value", lineno + 1)))?;
        let key = key.trim().trim_start_matches("--").to_string();
        if !allowed.contains(&key) {
            return Err(Failure::usage(format!(
                "config line {}: unknown key {key:?} for this subcommand",
                lineno + 1
            )));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Failure::usage(format!("config line {}: duplicate key {key:?}", lineno + 1)));
        }
    }
    Ok(out)
}

pub struct Resolver {
    file: BTreeMap<String, String>,
    resolved: Map<String, Value>,
}

impl Resolver {
    pub fn new(config: Option<&Path>, allowed: &[String]) -> Result<Self, Failure> {
        let file = match config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
                parse_config(&text, allowed)?
            }
            None => BTreeMap::new(),
        };
        let mut resolved = Map::new();
        if let Some(path) = config {
            resolved.insert("config".into(), Value::String(path.display().to_string()));
        }
        Ok(Self { file, resolved })
    }

    fn record<T: Display>(&mut self, key: &str, value: &T) {
        let s = value.to_string();
        let v = serde_json::from_str::<Value>(&s)
            .ok()
            .filter(|v| v.is_number() || v.is_boolean())
            .unwrap_or(Value::String(s));
        self.resolved.insert(key.to_string(), v);
    }

    pub fn opt<T>(&mut self, flag: Option<T>, key: &str) -> Result<Option<T>, Failure>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(s) => Some(
                    s.parse::<T>()
                        .map_err(|e| Failure::usage(format!("config key {key}: invalid value {s:?}: {e}")))?,
                ),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.record(key, v);
        }
        Ok(value)
    }

    pub fn or<T>(&mut self, flag: Option<T>, key: &str, default: T) -> Result<T, Failure>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.opt(flag, key)? {
            Some(v) => Ok(v),
            None => {
                self.record(key, &default);
                Ok(default)
            }
        }
    }

    pub fn req<T>(&mut self, flag: Option<T>, key: &str) -> Result<T, Failure>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.opt(flag, key)?
            .ok_or_else(|| Failure::usage(format!("missing required --{key}")))
    }

    pub fn into_json(self) -> Value {
        Value::Object(self.resolved)
    }
}
