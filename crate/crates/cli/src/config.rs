//! `key = value` run configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys may use `-` or
//! `_`; each key may appear once and must belong to the command's key set.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

pub const DECOMPOSE_KEYS: &[&str] = &["eps", "format"];
pub const COMPLETE_KEYS: &[&str] =
    &["sr", "seed", "lambda", "beta1", "beta2", "beta3", "alpha", "d", "max_iter", "tol", "format"];

#[derive(Debug, Default)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn parse(text: &str, allowed: &[&str]) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::usage(format!("config line {}: expected key = value", n + 1)));
            };
            let key = key.trim().replace('-', "_");
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::usage(format!(
                    "config line {}: unknown key `{key}` (allowed: {})",
                    n + 1,
                    allowed.join(", ")
                )));
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::usage(format!("config line {}: duplicate key `{key}`", n + 1)));
            }
        }
        Ok(FileConfig { values })
    }

    pub fn load(path: Option<&Path>, allowed: &[&str]) -> Result<Self, CliError> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::io(format!("cannot read config {}: {e}", p.display())))?;
                FileConfig::parse(&text, allowed)
            }
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.values
            .get(key)
            .map(|v| v.parse().map_err(|_| CliError::usage(format!("config key `{key}`: cannot parse {v:?}"))))
            .transpose()
    }

    /// Comma-separated list of reals.
    pub fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.values.get(key).map(|v| parse_list(v)).transpose()
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| CliError::usage(format!("cannot parse {x:?} as a number"))))
        .collect()
}

/// Flag value if given, else file value, else default.
pub fn layered<T: FromStr>(flag: Option<T>, file: &FileConfig, key: &str, default: T) -> Result<T, CliError> {
    Ok(match flag {
        Some(v) => v,
        None => file.get(key)?.unwrap_or(default),
    })
}
