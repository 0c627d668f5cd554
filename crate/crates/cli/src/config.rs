//! Flat `key = value` run configuration.
//!
//! Every key a command reads is recorded together with its resolved value,
//! defaults included, so that the manifest of a run is itself a complete
//! configuration for re-running it. Keys that were supplied but never read
//! are rejected.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{origin} line {line}: expected `key = value`, found {text:?}")]
    Syntax { origin: String, line: usize, text: String },
    #[error("key `{0}` given twice")]
    Duplicate(String),
    #[error("unknown key(s): {}", .0.join(", "))]
    Unknown(Vec<String>),
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("key `{key}`: cannot parse {value:?} ({expected})")]
    Invalid { key: String, value: String, expected: String },
    #[error("key `{key}`: {reason}")]
    Rejected { key: String, reason: String },
    #[error("key `{key}`: {path} does not exist")]
    NoSuchPath { key: String, path: String },
}

#[derive(Debug, Default, Clone)]
pub struct Config {
    given: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                origin: origin.to_string(),
                line: i + 1,
                text: raw.to_string(),
            })?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(ConfigError::Syntax { origin: origin.to_string(), line: i + 1, text: raw.to_string() });
            }
            if config.given.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(ConfigError::Duplicate(key.to_string()));
            }
        }
        Ok(config)
    }

    /// Applies a `key=value` override; later overrides replace earlier values.
    pub fn set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| ConfigError::Syntax {
            origin: "--set".into(),
            line: 1,
            text: assignment.to_string(),
        })?;
        self.given.insert(key.trim().to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.given.remove(key)
    }

    fn parse_value<T: FromStr>(key: &str, value: &str, expected: &str) -> Result<T, ConfigError> {
        value.parse().map_err(|_| ConfigError::Invalid {
            key: key.to_string(),
            value: value.to_string(),
            expected: expected.to_string(),
        })
    }

    pub fn get<T: FromStr + Display>(&mut self, key: &str, default: T) -> Result<T, ConfigError> {
        let value = match self.given.get(key) {
            Some(v) => Self::parse_value(key, v, std::any::type_name::<T>())?,
            None => default,
        };
        self.resolved.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    pub fn require<T: FromStr + Display>(&mut self, key: &str) -> Result<T, ConfigError> {
        let raw = self.given.get(key).ok_or_else(|| ConfigError::Missing(key.to_string()))?;
        let value: T = Self::parse_value(key, raw, std::any::type_name::<T>())?;
        self.resolved.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    /// An optional value; `none` (or absence) means `None`.
    pub fn optional<T: FromStr + Display>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        let value = match self.given.get(key).map(String::as_str) {
            None | Some("none") => None,
            Some(v) => Some(Self::parse_value(key, v, std::any::type_name::<T>())?),
        };
        let shown = value.as_ref().map_or_else(|| "none".to_string(), ToString::to_string);
        self.resolved.insert(key.to_string(), shown);
        Ok(value)
    }

    /// One of a fixed set of words.
    pub fn choice(&mut self, key: &str, options: &[&str], default: &str) -> Result<String, ConfigError> {
        let value = self.given.get(key).map_or(default, String::as_str).to_string();
        if !options.contains(&value.as_str()) {
            return Err(ConfigError::Invalid { key: key.to_string(), value, expected: options.join(" | ") });
        }
        self.resolved.insert(key.to_string(), value.clone());
        Ok(value)
    }

    /// An existing input path, recorded in canonical form.
    pub fn input_path(&mut self, key: &str) -> Result<PathBuf, ConfigError> {
        let raw: String = self.given.get(key).cloned().ok_or_else(|| ConfigError::Missing(key.to_string()))?;
        let path = Path::new(&raw)
            .canonicalize()
            .map_err(|_| ConfigError::NoSuchPath { key: key.to_string(), path: raw.clone() })?;
        self.resolved.insert(key.to_string(), path.display().to_string());
        Ok(path)
    }

    pub fn optional_input_path(&mut self, key: &str) -> Result<Option<PathBuf>, ConfigError> {
        if matches!(self.given.get(key).map(String::as_str), None | Some("none")) {
            self.resolved.insert(key.to_string(), "none".into());
            return Ok(None);
        }
        self.input_path(key).map(Some)
    }

    /// Rejects keys that were given but never read.
    pub fn finish(&self) -> Result<(), ConfigError> {
        let unknown: Vec<String> = self.given.keys().filter(|k| !self.resolved.contains_key(*k)).cloned().collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Unknown(unknown))
        }
    }

    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }
}
