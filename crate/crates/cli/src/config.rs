//! Run configuration: merging flags over a config file, and the header that
//! echoes the effective settings into every output.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Prefix of the header lines that carry the effective configuration.
pub const HEADER_PREFIX: &str = "# config: ";

/// Keys that decide where output goes or how fast it is produced, never what
/// it contains. They are not echoed, so outputs stay byte-identical across
/// thread counts and destinations.
pub const UNECHOED_KEYS: [&str; 4] = ["config", "out", "out_dir", "threads"];

/// Effective settings of one invocation, as strings keyed by option name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub values: BTreeMap<String, String>,
}

fn normalize_key(k: &str) -> String {
    k.trim().replace('-', "_")
}

impl RunConfig {
    pub fn new(command: impl Into<String>) -> Self {
        RunConfig {
            command: command.into(),
            values: BTreeMap::new(),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn parse<T>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.get(key)
            .map(|v| {
                v.trim()
                    .parse::<T>()
                    .map_err(|e| CliError::Usage(format!("invalid value {v:?} for {key}: {e}")))
            })
            .transpose()
    }

    pub fn require<T>(&self, key: &str) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.parse(key)?
            .ok_or_else(|| CliError::Usage(format!("missing required option {key}")))
    }

    /// Comma-separated list; absent or empty gives an empty list.
    pub fn list<T>(&self, key: &str) -> Result<Vec<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let Some(raw) = self.get(key) else {
            return Ok(Vec::new());
        };
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("invalid entry {s:?} in {key}: {e}")))
            })
            .collect()
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        Ok(self.parse::<bool>(key)?.unwrap_or(false))
    }

    /// The configuration without the keys that never reach the header.
    pub fn echoed(&self) -> RunConfig {
        RunConfig {
            command: self.command.clone(),
            values: self
                .values
                .iter()
                .filter(|(k, _)| !UNECHOED_KEYS.contains(&k.as_str()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    /// `# logchain <command>` followed by one `# config: key=value` line per
    /// echoed key, in key order.
    pub fn header_lines(&self) -> String {
        let mut s = format!("# logchain {}\n", self.command);
        for (k, v) in &self.echoed().values {
            s.push_str(&format!("{HEADER_PREFIX}{k}={v}\n"));
        }
        s
    }

    /// Inverse of [`RunConfig::header_lines`]; other lines are ignored.
    pub fn from_header(text: &str) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        for line in text.lines() {
            if let Some(cmd) = line.strip_prefix("# logchain ") {
                cfg.command = cmd.trim().to_string();
            } else if let Some(kv) = line.strip_prefix(HEADER_PREFIX) {
                let (k, v) = split_kv(kv)?;
                cfg.values.insert(k, v);
            }
        }
        Ok(cfg)
    }

    /// Inverse of the `command`/`config` members of a JSON report.
    pub fn from_json(doc: &serde_json::Value) -> Result<RunConfig, CliError> {
        let bad = || CliError::Usage("JSON document has no string-valued \"config\" object".into());
        let obj = doc.get("config").and_then(|c| c.as_object()).ok_or_else(bad)?;
        let mut cfg = RunConfig::new(doc.get("command").and_then(|c| c.as_str()).unwrap_or_default());
        for (k, v) in obj {
            cfg.values.insert(k.clone(), v.as_str().ok_or_else(bad)?.to_string());
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.echoed()
                .values
                .into_iter()
                .map(|(k, v)| (k, serde_json::Value::String(v)))
                .collect(),
        )
    }
}

fn split_kv(line: &str) -> Result<(String, String), CliError> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("expected key=value, got {line:?}")))?;
    let k = normalize_key(k);
    if k.is_empty() {
        return Err(CliError::Usage(format!("empty key in {line:?}")));
    }
    Ok((k, v.trim().to_string()))
}

/// Reads config-file text into key/value pairs.
///
/// Plain files hold `key = value` lines, with `#` comments and blank lines
/// ignored; keys may use `-` or `_`. An earlier output can be passed back
/// directly: a CSV header contributes its `# config:` lines and a JSON
/// report its `config` object.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    if text.trim_start().starts_with('{') {
        let doc: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config is not valid JSON: {e}")))?;
        return Ok(RunConfig::from_json(&doc)?.values);
    }
    if text.lines().any(|l| l.starts_with(HEADER_PREFIX)) {
        return Ok(RunConfig::from_header(text)?.values);
    }
    let mut out = BTreeMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = split_kv(line)?;
        out.insert(k, v);
    }
    Ok(out)
}
