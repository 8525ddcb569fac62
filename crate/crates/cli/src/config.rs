//! Optional TOML config. Keys are the long flag names, e.g.
//! `window-fraction = 0.5`. A `[recognize]` (or other subcommand) table
//! overrides top-level keys for that subcommand; command-line flags override
//! both.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;

use crate::error::{CliError, CliResult};

#[derive(Debug, Default)]
pub struct Config {
    table: toml::Table,
}

impl Config {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let table = text
            .parse::<toml::Table>()
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        Ok(Config { table })
    }

    fn lookup(&self, section: &str, key: &str) -> Option<&toml::Value> {
        self.table
            .get(section)
            .and_then(toml::Value::as_table)
            .and_then(|t| t.get(key))
            .or_else(|| self.table.get(key).filter(|v| !v.is_table()))
    }

    /// `flag` if given, else the config value for `key`, else `None`.
    pub fn pick<T: DeserializeOwned>(&self, section: &str, key: &str, flag: Option<T>) -> CliResult<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.lookup(section, key) {
            None => Ok(None),
            Some(v) => v
                .clone()
                .try_into()
                .map(Some)
                .map_err(|e| CliError::usage(format!("config key `{key}`: {e}"))),
        }
    }

    /// Like [`Config::pick`] for repeatable flags: an empty flag list defers
    /// to the config.
    pub fn pick_list<T: DeserializeOwned>(&self, section: &str, key: &str, flag: Vec<T>) -> CliResult<Vec<T>> {
        let flag = if flag.is_empty() { None } else { Some(flag) };
        Ok(self.pick(section, key, flag)?.unwrap_or_default())
    }
}
