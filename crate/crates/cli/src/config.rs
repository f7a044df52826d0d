//! `key = value` configuration files. Keys are long flag names; flags given
//! on the command line win.

use std::collections::BTreeMap;
use std::path::Path;

use crate::CliError;

/// Keys accepted in a config file.
pub const KEYS: &[&str] = &["a", "b", "n", "n-grid", "x", "theta", "ell", "k", "replicates", "seed", "out-dir", "trunc"];

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Config(BTreeMap<String, String>);

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
            let k = k.trim().trim_start_matches("--");
            if !KEYS.contains(&k) {
                return Err(CliError::Usage(format!("config line {}: unknown key {k}", i + 1)));
            }
            map.insert(k.to_owned(), v.trim().to_owned());
        }
        Ok(Self(map))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The value for `key`, parsed.
    pub fn get<T>(&self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, CliError> {
        self.0
            .get(key)
            .map(|v| parse(v).map_err(|e| CliError::Usage(format!("config key {key}: {e}"))))
            .transpose()
    }
}
