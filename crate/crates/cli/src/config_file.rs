//! Flat key-value configuration files with one section per subcommand.
//!
//! ```text
//! # comment
//! [de]
//! alpha = 1.0
//! mode = sic
//! ```
//!
//! Keys are the long flag names of the matching subcommand; command-line
//! flags override file values. Unknown sections and keys are rejected by
//! name.

use std::collections::{BTreeMap, BTreeSet};

pub const SECTIONS: [&str; 5] = ["de", "sic", "linksim", "capacity", "sweep"];

#[derive(Debug, Default)]
pub struct ConfigFile {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn parse(text: &str, source: &str) -> Result<ConfigFile, String> {
        let mut cfg = ConfigFile::default();
        let mut current: Option<String> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return Err(format!(
                        "{source}:{}: unknown section [{name}] (expected one of {})",
                        lineno + 1,
                        SECTIONS.join(", ")
                    ));
                }
                current = Some(name.to_string());
                cfg.sections.entry(name.to_string()).or_default();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!("{source}:{}: expected `key = value`", lineno + 1));
            };
            let Some(section) = &current else {
                return Err(format!(
                    "{source}:{}: key outside of any [section]",
                    lineno + 1
                ));
            };
            cfg.sections
                .get_mut(section)
                .expect("section created on entry")
                .insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(cfg)
    }

    pub fn section(&self, name: &str) -> Section {
        Section {
            values: self.sections.get(name).cloned().unwrap_or_default(),
            consumed: BTreeSet::new(),
        }
    }
}

/// One section's values plus bookkeeping so unused (unknown) keys can be
/// reported after resolution.
#[derive(Debug)]
pub struct Section {
    values: BTreeMap<String, String>,
    consumed: BTreeSet<String>,
}

impl Section {
    /// Parsed value for `key`, if present.
    pub fn get<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        self.consumed.insert(key.to_string());
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| format!("config key `{key}`: invalid value {raw:?} ({e})")),
        }
    }

    pub fn get_string(&mut self, key: &str) -> Option<String> {
        self.consumed.insert(key.to_string());
        self.values.get(key).cloned()
    }

    /// Error if any key in the section was never consulted.
    pub fn reject_unknown(&self) -> Result<(), String> {
        for key in self.values.keys() {
            if !self.consumed.contains(key) {
                return Err(format!("unknown config key `{key}`"));
            }
        }
        Ok(())
    }
}
