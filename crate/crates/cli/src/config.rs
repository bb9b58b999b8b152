//! Flat `section.key = value` configuration.
//!
//! Sources are layered: built-in defaults, then a config file (key-value
//! text or a previous run's JSON manifest), then `--set` pairs, then typed
//! command-line flags. The resolved map is what the manifest echoes.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {msg}")]
    Syntax { path: String, line: usize, msg: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("configuration key `{key}`: cannot parse `{value}` ({msg})")]
    Value { key: String, value: String, msg: String },
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("manifest {0} has no `config` object")]
    Manifest(String),
}

/// Every recognized key with its default. Keys are `section.name`.
pub const DEFAULTS: &[(&str, &str)] = &[
    ("run.seed", "1"),
    ("run.workers", "0"),
    ("run.out", "."),
    ("run.strict", "false"),
    ("run.svg", "false"),
    ("covariance.family", "generalized-cauchy"),
    ("covariance.theta", "0.5"),
    ("covariance.ell", "1"),
    ("covariance.dimension", "1"),
    ("grid.half_width", "4"),
    ("grid.spacing", "1"),
    ("grid.boundary", "reflecting"),
    ("grid.widen", "true"),
    ("polymer.dt", "1"),
    ("polymer.cutoff", "4"),
    ("polymer.realizations", "200"),
    ("polymer.beta", "1"),
    ("polymer.t", "16"),
    ("polymer.betas", "0,0.25,0.5,0.75,1"),
    ("polymer.t_list", "8,16,32,64"),
    ("polymer.paths", "40"),
    ("polymer.gamma", "0.5"),
    ("polymer.lambda", "0.3"),
    ("polymer.r_step", "4"),
    ("polymer.d_beta", "0.05"),
    ("polymer.pairs", "8"),
    ("polymer.checkpoints", "8,16,32,64"),
    ("field.n_steps", "16"),
    ("field.dump", "false"),
    ("check.max_distance", "10"),
    ("check.points", "30"),
    ("pinning.potential", "power-law"),
    ("pinning.theta", "0.5"),
    ("pinning.ell", "1"),
    ("pinning.radius", "1"),
    ("pinning.dimension", "1"),
    ("pinning.h_list", "0,0.05,0.1,0.2,0.4"),
    ("pinning.h", "0.05"),
    ("pinning.method", "transfer"),
    ("pinning.spacing", "0.25"),
    ("pinning.dt", "auto"),
    ("pinning.domain", "auto"),
    ("pinning.margin", "8"),
    ("pinning.ladder", "8,16,32"),
    ("fit.input", ""),
    ("fit.transform", "loglog-y"),
    ("fit.n_boot", "1000"),
];

/// Resolved configuration: every key of [`DEFAULTS`] has a value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Default for Config {
    fn default() -> Self {
        Config { values: DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect() }
    }
}

impl Config {
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.into();
                Ok(())
            }
            None => Err(ConfigError::UnknownKey(key.to_string())),
        }
    }

    /// Apply a `KEY=VALUE` pair.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (k, v) = pair.split_once('=').ok_or_else(|| ConfigError::Syntax {
            path: "--set".into(),
            line: 0,
            msg: format!("expected KEY=VALUE, got `{pair}`"),
        })?;
        self.set(k.trim(), v.trim())
    }

    /// Merge a file: JSON manifests contribute their `config` object,
    /// anything else is parsed as key-value text.
    pub fn merge_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        if text.trim_start().starts_with('{') {
            let name = path.display().to_string();
            let v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| ConfigError::Syntax { path: name.clone(), line: e.line(), msg: e.to_string() })?;
            let obj = v.get("config").and_then(|c| c.as_object()).ok_or(ConfigError::Manifest(name))?;
            for (k, v) in obj {
                let s = v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string());
                self.set(k, s)?;
            }
            Ok(())
        } else {
            self.merge_text(&text, &path.display().to_string())
        }
    }

    /// Key-value text: `section.key = value` lines, or bare `key = value`
    /// lines under a `[section]` header. `#` starts a comment.
    pub fn merge_text(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| ConfigError::Syntax { path: origin.to_string(), line: i + 1, msg };
            if let Some(inner) = line.strip_prefix('[') {
                section = inner.strip_suffix(']').ok_or_else(|| err("unterminated section header".into()))?.trim().to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got `{line}`")))?;
            let k = k.trim();
            let key = if k.contains('.') || section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
            self.set(&key, v.trim())?;
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("unregistered key {key}"))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.raw(key);
        v.parse().map_err(|e: T::Err| ConfigError::Value { key: key.into(), value: v.into(), msg: e.to_string() })
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.raw(key);
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e: T::Err| ConfigError::Value { key: key.into(), value: v.into(), msg: e.to_string() }))
            .collect()
    }

    /// `None` for the literal `auto`.
    pub fn auto<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        if self.raw(key) == "auto" {
            Ok(None)
        } else {
            self.get(key).map(Some)
        }
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// Key-value text that [`Config::merge_text`] reads back to `self`.
    #[cfg(test)]
    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
