//! Flag defaults from a TOML file. A key is looked up first in the table
//! named by the command path (for `pipeline synth`, table `pipeline.synth`),
//! then at the top level, so shared settings like `seed` or `out_dir` can
//! be written once. Command-line flags always win; callers consult the
//! overlay only for flags the user left unset.

use std::path::{Path, PathBuf};

use crate::{CliError, CliResult};

pub struct Overlay {
    root: toml::Table,
}

impl Overlay {
    pub fn empty() -> Overlay {
        Overlay { root: toml::Table::new() }
    }

    pub fn load(path: &Path) -> CliResult<Overlay> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::usage(format!("cannot read config file {}: {e}", path.display()))
        })?;
        let root: toml::Table = text.parse().map_err(|e| {
            CliError::usage(format!("config file {}: {e}", path.display()))
        })?;
        Ok(Overlay { root })
    }

    fn lookup(&self, section: &[&str], key: &str) -> Option<&toml::Value> {
        let mut table = &self.root;
        for part in section {
            match table.get(*part) {
                Some(toml::Value::Table(t)) => table = t,
                _ => return self.root.get(key),
            }
        }
        table.get(key).or_else(|| self.root.get(key))
    }

    fn bad(key: &str, want: &str, got: &toml::Value) -> CliError {
        CliError::usage(format!("config key {key:?} should be {want}, got {got}"))
    }

    pub fn u64_opt(&self, section: &[&str], key: &str) -> CliResult<Option<u64>> {
        match self.lookup(section, key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(v) => Err(Self::bad(key, "a non-negative integer", v)),
        }
    }

    pub fn usize_opt(&self, section: &[&str], key: &str) -> CliResult<Option<usize>> {
        Ok(self.u64_opt(section, key)?.map(|v| v as usize))
    }

    pub fn f64_opt(&self, section: &[&str], key: &str) -> CliResult<Option<f64>> {
        match self.lookup(section, key) {
            None => Ok(None),
            Some(toml::Value::Float(f)) => Ok(Some(*f)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(Self::bad(key, "a number", v)),
        }
    }

    pub fn string_opt(&self, section: &[&str], key: &str) -> CliResult<Option<String>> {
        match self.lookup(section, key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => Err(Self::bad(key, "a string", v)),
        }
    }

    pub fn path_opt(&self, section: &[&str], key: &str) -> CliResult<Option<PathBuf>> {
        Ok(self.string_opt(section, key)?.map(PathBuf::from))
    }
}
