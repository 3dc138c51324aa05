use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;

use clap::ValueEnum;
use fieldsup::params::{canonical_key, parse_real};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Tail,
    Constant,
    Validate,
    Simulate,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Tail => "tail",
            Command::Constant => "constant",
            Command::Validate => "validate",
            Command::Simulate => "simulate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
    #[default]
    Pretty,
}

/// A fully resolved run: everything needed to reproduce the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub parameters: BTreeMap<String, String>,
    #[serde(default)]
    pub output: Format,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

/// Config file contents; every field may be overridden from the command line.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub command: Option<Command>,
    #[serde(default)]
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub output: Option<Format>,
    pub seed: Option<u64>,
    pub output_path: Option<PathBuf>,
}

impl ConfigFile {
    pub fn parameters(&self) -> Result<BTreeMap<String, String>, Vec<String>> {
        let mut out = BTreeMap::new();
        let mut errors = Vec::new();
        for (k, v) in &self.parameters {
            let text = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::Bool(b) => b.to_string(),
                other => {
                    errors.push(format!("parameter `{k}`: expected a string or number, got {other}"));
                    continue;
                }
            };
            out.insert(normalize_key(k), text);
        }
        if errors.is_empty() {
            Ok(out)
        } else {
            Err(errors)
        }
    }
}

/// `alpha-1`, `α₁`, `horizon-T` and friends onto the names commands look up.
pub fn normalize_key(key: &str) -> String {
    let k = key.trim();
    if let Some(c) = canonical_key(k) {
        return c.to_string();
    }
    let k = k.replace('-', "_");
    match k.as_str() {
        "r_t" | "r_T" => "r_T".into(),
        _ => k.to_lowercase(),
    }
}

/// Splits `k=v,k=v` lists, as used by `--case-params`.
pub fn split_pairs(raw: &str) -> Result<Vec<(String, String)>, String> {
    raw.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (normalize_key(k), v.trim().to_string()))
                .ok_or_else(|| format!("expected key=value, got `{p}`"))
        })
        .collect()
}

/// Typed, tracked access to a command's parameters.
///
/// Problems are collected rather than returned immediately so that one run
/// reports every bad field at once; keys never looked up are reported as unknown.
pub struct Params<'a> {
    map: &'a BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
    errors: RefCell<Vec<String>>,
}

impl<'a> Params<'a> {
    pub fn new(map: &'a BTreeMap<String, String>) -> Self {
        Self { map, used: RefCell::default(), errors: RefCell::default() }
    }

    pub fn error(&self, key: &str, msg: impl fmt::Display) {
        self.errors.borrow_mut().push(format!("parameter `{key}`: {msg}"));
    }

    pub fn raw(&self, key: &str) -> Option<&'a str> {
        self.used.borrow_mut().insert(key.to_string());
        self.map.get(key).map(String::as_str)
    }

    pub fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    pub fn real(&self, key: &str) -> Option<f64> {
        let raw = self.raw(key)?;
        let v = parse_real(raw);
        if v.is_none() {
            self.error(key, format!("`{raw}` is not a number"));
        }
        v
    }

    pub fn real_or(&self, key: &str, default: f64) -> f64 {
        self.real(key).unwrap_or(default)
    }

    /// Required real; records a diagnostic and returns NaN when absent.
    pub fn need(&self, key: &str) -> f64 {
        if !self.has(key) {
            self.error(key, "missing");
            self.used.borrow_mut().insert(key.to_string());
            return f64::NAN;
        }
        self.real(key).unwrap_or(f64::NAN)
    }

    /// Nonnegative integer, also accepted in exponent form such as `1e6`.
    pub fn count(&self, key: &str) -> Option<u64> {
        let raw = self.raw(key)?;
        let v = raw
            .trim()
            .parse::<u64>()
            .ok()
            .or_else(|| parse_real(raw).filter(|x| *x >= 0.0 && x.fract() == 0.0 && *x < 1.8e19).map(|x| x as u64));
        if v.is_none() {
            self.error(key, format!("`{raw}` is not a nonnegative integer"));
        }
        v
    }

    pub fn reals(&self, key: &str) -> Option<Vec<f64>> {
        let raw = self.raw(key)?;
        let mut out = Vec::new();
        for part in raw.split([',', ' ']).filter(|p| !p.is_empty()) {
            match parse_real(part) {
                Some(v) => out.push(v),
                None => {
                    self.error(key, format!("`{part}` is not a number"));
                    return None;
                }
            }
        }
        Some(out)
    }

    pub fn choice<T: Copy>(&self, key: &str, options: &[(&str, T)]) -> Option<T> {
        let raw = self.raw(key)?;
        let hit = options.iter().find(|(name, _)| name.eq_ignore_ascii_case(raw.trim())).map(|(_, v)| *v);
        if hit.is_none() {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            self.error(key, format!("`{raw}` is not one of {}", names.join(", ")));
        }
        hit
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(PathBuf::from)
    }

    /// Collected diagnostics, including unknown keys; empty when the run may proceed.
    pub fn finish(self) -> Vec<String> {
        let used = self.used.into_inner();
        let mut errors = self.errors.into_inner();
        for k in self.map.keys().filter(|k| !used.contains(*k)) {
            errors.push(format!("parameter `{k}`: unknown for this command"));
        }
        errors
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_and_pairs() {
        assert_eq!(normalize_key("α₁"), "alpha1");
        assert_eq!(normalize_key("horizon-T"), "horizon_t");
        let pairs = split_pairs("α₁=1, a₃=−1,S=1").unwrap();
        assert_eq!(pairs[1], ("a3".to_string(), "−1".to_string()));
        assert!(split_pairs("alpha1").is_err());
    }

    #[test]
    fn params_report_unknown_and_bad_values() {
        let map: BTreeMap<String, String> = [("reps", "1e6"), ("u", "1,2"), ("bogus", "x"), ("alpha", "abc")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let p = Params::new(&map);
        assert_eq!(p.count("reps"), Some(1_000_000));
        assert_eq!(p.reals("u"), Some(vec![1.0, 2.0]));
        assert_eq!(p.real("alpha"), None);
        assert!(p.need("S").is_nan());
        let errs = p.finish();
        assert_eq!(errs.len(), 3, "{errs:?}");
        assert!(errs.iter().any(|e| e.contains("`bogus`")));
    }
}
