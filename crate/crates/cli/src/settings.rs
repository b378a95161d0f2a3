//! Flat `key = value` configuration with optional `[section]` headers.
//!
//! Sections only group keys visually; every key lives in one namespace and
//! may appear once per file. Command-line flags override keys of the same
//! name.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// Every key understood by some subcommand.
pub const KNOWN_KEYS: &[&str] = &[
    "seed", "out", "graph", "edges", "d", "m", "m_attach", "n", "simulator", "params", "library",
    "intervene", "include_observational", "weight_low", "weight_high", "positive_fraction", "mu0",
    "theta", "alpha", "beta", "adjust", "noise_std", "dt", "burn_in", "decay", "noise_q", "k_range",
    "k_fixed", "basal_range", "hill_n", "reps", "ks", "sizes", "chain_sizes", "graph_sizes",
    "edge_factor", "simulators", "sergio_max_d", "timeout_secs", "timing_threads", "reference",
    "n_reference", "alphas", "effect_threshold", "input", "data", "predicted", "reversal_cost",
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut settings = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') || line.len() < 3 {
                    return Err(CliError::validation(format!("config line {line_no}: malformed section header")));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::validation(format!("config line {line_no}: expected `key = value`")))?;
            let key = key.trim();
            check_key(key).map_err(|e| CliError::validation(format!("config line {line_no}: {e}")))?;
            if settings.values.contains_key(key) {
                return Err(CliError::validation(format!("config line {line_no}: duplicate key `{key}`")));
            }
            settings.values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(settings)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets `key`, replacing any value from the config file.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> CliResult<()> {
        check_key(key).map_err(CliError::validation)?;
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn set_if(&mut self, key: &str, value: Option<impl Display>) -> CliResult<()> {
        match value {
            Some(v) => self.set(key, v.to_string()),
            None => Ok(()),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.raw(key).map(|v| parse_value(key, v)).transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> CliResult<Option<Vec<T>>> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_value(key, s))
                    .collect()
            })
            .transpose()
    }

    /// `lo,hi` with `lo < hi`.
    pub fn get_range(&self, key: &str) -> CliResult<Option<(f64, f64)>> {
        match self.get_list::<f64>(key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 && v[0] < v[1] => Ok(Some((v[0], v[1]))),
            Some(_) => Err(CliError::validation(format!("`{key}` must be `low,high` with low < high"))),
        }
    }

    pub fn get_bool(&self, key: &str, default: bool) -> CliResult<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(other) => Err(CliError::validation(format!("`{key}`: expected a boolean, got `{other}`"))),
        }
    }
}

fn check_key(key: &str) -> Result<(), String> {
    if KNOWN_KEYS.contains(&key) {
        Ok(())
    } else {
        Err(format!("unknown key `{key}`"))
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> CliResult<T> {
    raw.parse::<T>()
        .map_err(|_| CliError::validation(format!("`{key}`: cannot parse `{raw}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_comments_and_overrides() {
        let text = "# run\n[graph]\nd = 10\nm=20\n\n[sim]\nsimulator = regnet ; not a comment\nsizes = 3, 10,100\nk_range = 1,5\n";
        let mut s = Settings::parse(text).unwrap();
        assert_eq!(s.get::<usize>("d").unwrap(), Some(10));
        assert_eq!(s.raw("simulator"), Some("regnet ; not a comment"));
        assert_eq!(s.get_list::<usize>("sizes").unwrap(), Some(vec![3, 10, 100]));
        assert_eq!(s.get_range("k_range").unwrap(), Some((1.0, 5.0)));
        s.set("d", "12").unwrap();
        assert_eq!(s.get_or::<usize>("d", 0).unwrap(), 12);
        assert_eq!(s.get_or::<usize>("n", 7).unwrap(), 7);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Settings::parse("d = 1\nd = 2\n").is_err());
        assert!(Settings::parse("nonsense = 1\n").is_err());
        assert!(Settings::parse("just text\n").is_err());
        assert!(Settings::parse("[open\n").is_err());
        let s = Settings::parse("d = ten\nk_range = 5,1\ninclude_observational = maybe\n").unwrap();
        assert_eq!(s.get::<usize>("d").unwrap_err().exit_code(), 2);
        assert!(s.get_range("k_range").is_err());
        assert!(s.get_bool("include_observational", false).is_err());
    }
}
