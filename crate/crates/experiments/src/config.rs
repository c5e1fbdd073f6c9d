//! Flat key-value experiment configs.
//!
//! The format is deliberately plain so configs can be written by hand and
//! diffed: one `key = value` pair per line, `#` comments, blank lines
//! ignored. List values are comma-separated. Keys are consumed by the
//! scenario builders; leftover keys are an error, which catches typos like
//! `lamda = 0.5` before they silently fall back to a default.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use dcd_core::{Error, Result};

/// A parsed config file: raw key-value pairs plus bookkeeping of which keys
/// have been read so far.
#[derive(Debug, Clone)]
pub struct Config {
    path: String,
    entries: BTreeMap<String, (usize, String)>,
    used: BTreeSet<String>,
}

impl Config {
    /// Reads and parses a config file.
    pub fn load(path: &Path) -> Result<Config> {
        let text = fs::read_to_string(path).map_err(|e| Error::File {
            path: path.display().to_string(),
            source: e,
        })?;
        Config::parse(&text, &path.display().to_string())
    }

    /// Parses config text; `path` is used only in error messages.
    pub fn parse(text: &str, path: &str) -> Result<Config> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_string(),
                line,
                message: "expected 'key = value'".into(),
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line,
                    message: "empty key".into(),
                });
            }
            if entries.insert(key.clone(), (line, value)).is_some() {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line,
                    message: format!("duplicate key '{key}'"),
                });
            }
        }
        Ok(Config {
            path: path.to_string(),
            entries,
            used: BTreeSet::new(),
        })
    }

    fn parse_error(&self, key: &str, message: impl Display) -> Error {
        let line = self.entries.get(key).map(|(l, _)| *l).unwrap_or(0);
        Error::Parse {
            path: self.path.clone(),
            line,
            message: format!("key '{key}': {message}"),
        }
    }

    /// Raw string lookup; marks the key as consumed.
    pub fn get(&mut self, key: &str) -> Option<String> {
        let value = self.entries.get(key).map(|(_, v)| v.clone());
        if value.is_some() {
            self.used.insert(key.to_string());
        }
        value
    }

    /// A required value parsed with `FromStr`.
    pub fn require<T: FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        match self.get(key) {
            None => Err(self.parse_error(key, "missing required key")),
            Some(v) => v.parse().map_err(|e| self.parse_error(key, e)),
        }
    }

    /// An optional value parsed with `FromStr`.
    pub fn optional<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| self.parse_error(key, e)),
        }
    }

    /// An optional value with a default.
    pub fn or_default<T: FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        Ok(self.optional(key)?.unwrap_or(default))
    }

    /// A required comma-separated list.
    pub fn require_list<T: FromStr>(&mut self, key: &str) -> Result<Vec<T>>
    where
        T::Err: Display,
    {
        match self.optional_list(key)? {
            None => Err(self.parse_error(key, "missing required key")),
            Some(v) => Ok(v),
        }
    }

    /// An optional comma-separated list; present-but-empty is an error.
    pub fn optional_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: Display,
    {
        let Some(raw) = self.get(key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for part in raw.split(',') {
            let part = part.trim();
            if part.is_empty() {
                return Err(self.parse_error(key, "empty list element"));
            }
            out.push(part.parse().map_err(|e| self.parse_error(key, e))?);
        }
        Ok(Some(out))
    }

    /// A yes/no flag (`true`/`false`), defaulting to `false`.
    pub fn flag(&mut self, key: &str) -> Result<bool> {
        match self.get(key).as_deref() {
            None => Ok(false),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(other) => Err(self.parse_error(key, format!("expected true/false, got '{other}'"))),
        }
    }

    /// Errors if any key was never consumed — the typo guard.
    pub fn finish(&self) -> Result<()> {
        let unused: Vec<&String> = self
            .entries
            .keys()
            .filter(|k| !self.used.contains(*k))
            .collect();
        match unused.first() {
            None => Ok(()),
            Some(first) => {
                let (line, _) = self.entries[*first];
                Err(Error::Parse {
                    path: self.path.clone(),
                    line,
                    message: format!(
                        "unknown key(s): {}",
                        unused
                            .iter()
                            .map(|s| s.as_str())
                            .collect::<Vec<_>>()
                            .join(", ")
                    ),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_comments_and_lists() {
        let text = "# comment\nscenario = pilot_sweep\nn=2000\nr_grid = 0.05, 0.1 ,0.2\n\nlee = true\n";
        let mut cfg = Config::parse(text, "test.cfg").unwrap();
        assert_eq!(cfg.require::<String>("scenario").unwrap(), "pilot_sweep");
        assert_eq!(cfg.require::<usize>("n").unwrap(), 2000);
        assert_eq!(
            cfg.require_list::<f64>("r_grid").unwrap(),
            vec![0.05, 0.1, 0.2]
        );
        assert!(cfg.flag("lee").unwrap());
        cfg.finish().unwrap();
    }

    #[test]
    fn unknown_keys_fail_finish() {
        let mut cfg = Config::parse("a = 1\nb = 2\n", "t").unwrap();
        let _: usize = cfg.require("a").unwrap();
        let err = cfg.finish().unwrap_err();
        assert!(err.to_string().contains("unknown key(s): b"), "{err}");
    }

    #[test]
    fn duplicate_and_malformed_lines_are_rejected() {
        assert!(Config::parse("a = 1\na = 2\n", "t").is_err());
        assert!(Config::parse("just a line\n", "t").is_err());
    }

    #[test]
    fn missing_required_key_names_the_key() {
        let mut cfg = Config::parse("", "t").unwrap();
        let err = cfg.require::<usize>("n").unwrap_err();
        assert!(err.to_string().contains("'n'"), "{err}");
    }

    #[test]
    fn defaults_and_optionals() {
        let mut cfg = Config::parse("x = 7\n", "t").unwrap();
        assert_eq!(cfg.or_default::<u64>("x", 1).unwrap(), 7);
        assert_eq!(cfg.or_default::<u64>("y", 1).unwrap(), 1);
        assert_eq!(cfg.optional::<f64>("z").unwrap(), None);
        assert!(!cfg.flag("w").unwrap());
        cfg.finish().unwrap();
    }
}
