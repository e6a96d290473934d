//! Flat key-value configuration file (TOML syntax) with command-line
//! override semantics: a flag on the command line wins over the config
//! file, which wins over the built-in default.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    table: toml::Table,
    raw: Option<String>,
}

impl ConfigFile {
    pub fn empty() -> ConfigFile {
        ConfigFile::default()
    }

    pub fn load(path: &Path) -> Result<ConfigFile> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let table: toml::Table = raw
            .parse()
            .map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?;
        for (key, value) in &table {
            if value.is_table() || value.is_array() {
                return Err(Error::Usage(format!(
                    "{}: key '{key}' is not a flat value",
                    path.display()
                )));
            }
        }
        Ok(ConfigFile {
            table,
            raw: Some(raw),
        })
    }

    /// SHA-256 of the raw file bytes, for provenance in run manifests.
    pub fn hash(&self) -> Option<String> {
        self.raw.as_ref().map(|raw| {
            let digest = Sha256::digest(raw.as_bytes());
            format!("sha256:{digest:x}")
        })
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(v)) => Ok(Some(*v)),
            Some(toml::Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(other) => Err(type_error(key, "number", other)),
        }
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(v)) if *v >= 0 => Ok(Some(*v as u64)),
            Some(other) => Err(type_error(key, "non-negative integer", other)),
        }
    }

    pub fn get_u32(&self, key: &str) -> Result<Option<u32>> {
        Ok(self.get_u64(key)?.map(|v| v as u32))
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(toml::Value::Boolean(v)) => Ok(Some(*v)),
            Some(other) => Err(type_error(key, "boolean", other)),
        }
    }

    pub fn get_str(&self, key: &str) -> Result<Option<String>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(toml::Value::String(v)) => Ok(Some(v.clone())),
            Some(other) => Err(type_error(key, "string", other)),
        }
    }
}

fn type_error(key: &str, expected: &str, got: &toml::Value) -> Error {
    Error::Usage(format!(
        "config key '{key}' should be a {expected}, found {got}"
    ))
}
