//! `key = value` manifest files.
//!
//! Blank lines and lines starting with `#` are skipped. Keys use the
//! long flag names, with `-` and `_` interchangeable.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, Result};

use crate::{data_error, read_text};

#[derive(Clone, Debug, Default)]
pub struct Manifest {
    values: BTreeMap<String, String>,
    /// Relative paths in the manifest are resolved against this.
    base: PathBuf,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-").to_lowercase()
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let mut manifest =
            Self::parse(&text).map_err(|err| data_error(format!("{}: {}", path.display(), err)))?;
        manifest.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(manifest)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", idx + 1))?;
            values.insert(normalize(key), value.trim().to_owned());
        }
        Ok(Manifest {
            values,
            base: PathBuf::new(),
        })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize(key)).map(String::as_str)
    }

    /// The flag value if given, else the manifest value.
    pub fn value<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            None => Ok(None),
            Some(text) => text
                .parse()
                .map(Some)
                .map_err(|err| data_error(format!("manifest key '{}': {}", key, err))),
        }
    }

    pub fn path(&self, flag: Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.or_else(|| self.raw(key).map(|p| self.base.join(p)))
    }

    pub fn required_path(&self, flag: Option<PathBuf>, key: &str) -> Result<PathBuf> {
        self.path(flag, key)
            .ok_or_else(|| data_error(format!("missing --{} (flag or manifest key)", key)))
    }

    /// A switch is on if the flag is set or the manifest says `true`.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        Ok(self.value::<bool>(None, key)?.unwrap_or(false))
    }
}
