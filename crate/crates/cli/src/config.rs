//! Flat `key = value` config files and flag/config/default resolution.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::args::Common;
use crate::{CliError, CliResult};

/// Parse `key = value` lines. Blank lines and `#` comments are ignored;
/// keys are case-insensitive and `_` equals `-`.
pub fn parse_config(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("config line {}: expected `key = value`, got {raw:?}", i + 1)))?;
        let key = normalize(k);
        if key.is_empty() {
            return Err(CliError::config(format!("config line {}: empty key", i + 1)));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::config(format!("config line {}: duplicate key {key:?}", i + 1)));
        }
    }
    Ok(out)
}

fn normalize(k: &str) -> String {
    k.trim().to_ascii_lowercase().replace('_', "-")
}

/// Resolves each option from its flag, then the config file, then the
/// default, and records the value used.
pub struct Resolver {
    file: BTreeMap<String, String>,
    config_path: Option<String>,
    used: RefCell<BTreeSet<String>>,
    resolved: RefCell<BTreeMap<String, String>>,
}

impl Resolver {
    pub fn new(common: &Common) -> CliResult<Self> {
        let file = match &common.config {
            Some(p) => parse_config(&read(p)?)?,
            None => BTreeMap::new(),
        };
        Ok(Self {
            file,
            config_path: common.config.as_ref().map(|p| p.display().to_string()),
            used: RefCell::new(BTreeSet::new()),
            resolved: RefCell::new(BTreeMap::new()),
        })
    }

    pub fn config_path(&self) -> Option<&str> {
        self.config_path.as_deref()
    }

    /// Resolved value, if any source provides one.
    pub fn opt<T>(&self, key: &str, flag: Option<T>) -> CliResult<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.used.borrow_mut().insert(key.to_string());
        let v = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(s) => Some(
                    s.parse::<T>()
                        .map_err(|e| CliError::config(format!("config key {key:?}: bad value {s:?}: {e}")))?,
                ),
                None => None,
            },
        };
        if let Some(v) = &v {
            self.resolved.borrow_mut().insert(key.to_string(), v.to_string());
        }
        Ok(v)
    }

    pub fn get<T>(&self, key: &str, flag: Option<T>, default: T) -> CliResult<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = self.opt(key, flag)?.unwrap_or(default);
        self.resolved.borrow_mut().insert(key.to_string(), v.to_string());
        Ok(v)
    }

    /// Fails on config keys the subcommand does not know.
    pub fn finish(&self) -> CliResult<Vec<(String, String)>> {
        let used = self.used.borrow();
        let unknown: Vec<&String> = self.file.keys().filter(|k| !used.contains(*k)).collect();
        if !unknown.is_empty() {
            return Err(CliError::config(format!("unknown config keys: {unknown:?}")));
        }
        Ok(self.resolved.borrow().iter().map(|(k, v)| (k.clone(), v.clone())).collect())
    }
}

fn read(p: &Path) -> CliResult<String> {
    std::fs::read_to_string(p).map_err(|e| CliError::config(format!("cannot read config {}: {e}", p.display())))
}
