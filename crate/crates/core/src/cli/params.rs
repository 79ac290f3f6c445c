//! `key=value` parameters from the command line and an optional config file.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Params {
    values: BTreeMap<String, String>,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

impl Params {
    /// Parses `key = value` lines. Blank lines and `#` comments are ignored.
    pub fn from_config_text(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("config line {}: expected 'key = value'", i + 1)))?;
            let key = k.trim();
            if key.is_empty() {
                return Err(usage(format!("config line {}: empty key", i + 1)));
            }
            values.insert(key.to_string(), unquote(v.trim()).to_string());
        }
        Ok(Self { values })
    }

    pub fn from_config_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_config_text(&text)
    }

    /// Parses `key=value` arguments.
    pub fn from_args(args: &[String]) -> Result<Self> {
        let mut values = BTreeMap::new();
        for a in args {
            let (k, v) = a
                .split_once('=')
                .ok_or_else(|| usage(format!("expected key=value, got '{a}'")))?;
            if k.is_empty() {
                return Err(usage(format!("empty key in '{a}'")));
            }
            values.insert(k.to_string(), unquote(v).to_string());
        }
        Ok(Self { values })
    }

    /// Values from `other` take precedence.
    pub fn overridden_by(mut self, other: Params) -> Self {
        self.values.extend(other.values);
        self
    }

    pub fn set_default(&mut self, key: &str, value: &str) {
        self.values
            .entry(key.to_string())
            .or_insert_with(|| value.to_string());
    }

    pub fn insert(&mut self, key: &str, value: String) {
        self.values.insert(key.to_string(), value);
    }

    pub fn as_map(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// Rejects keys outside `allowed`.
    pub fn expect_only(&self, allowed: &[&str]) -> Result<()> {
        let allowed: BTreeSet<&str> = allowed.iter().copied().collect();
        let unknown: Vec<&str> = self
            .values
            .keys()
            .map(String::as_str)
            .filter(|k| !allowed.contains(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(usage(format!(
                "unknown parameter(s): {} (accepted: {})",
                unknown.join(", "),
                allowed.into_iter().collect::<Vec<_>>().join(", ")
            )))
        }
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn required_str(&self, key: &str) -> Result<&str> {
        self.str(key)
            .ok_or_else(|| usage(format!("missing required parameter '{key}'")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.str(key) {
            None => Ok(default),
            Some(v) => parse_f64(key, v),
        }
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        self.str(key).map(|v| parse_f64(key, v)).transpose()
    }

    pub fn u32_or(&self, key: &str, default: u32) -> Result<u32> {
        match self.str(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                usage(format!(
                    "parameter '{key}' must be a non-negative integer, got '{v}'"
                ))
            }),
        }
    }

    pub fn u64_opt(&self, key: &str) -> Result<Option<u64>> {
        self.str(key)
            .map(|v| {
                v.parse().map_err(|_| {
                    usage(format!(
                        "parameter '{key}' must be a non-negative integer, got '{v}'"
                    ))
                })
            })
            .transpose()
    }

    /// Comma-separated list of numbers.
    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.str(key) {
            None => Ok(default.to_vec()),
            Some(v) => v.split(',').map(|x| parse_f64(key, x.trim())).collect(),
        }
    }
}

fn unquote(v: &str) -> &str {
    v.strip_prefix('"').and_then(|x| x.strip_suffix('"')).unwrap_or(v)
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    match v {
        "inf" => Ok(f64::INFINITY),
        _ => v
            .parse::<f64>()
            .map_err(|_| usage(format!("parameter '{key}' must be a number, got '{v}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn args_override_config() {
        let file =
            Params::from_config_text("# flagship\np = 3\nq=2 # inline\n\nf = \"1*r^1 on (0,1]\"\n").unwrap();
        let args = Params::from_args(&["q=4".to_string()]).unwrap();
        let merged = file.overridden_by(args);
        assert_eq!(merged.f64_or("p", 0.0).unwrap(), 3.0);
        assert_eq!(merged.f64_or("q", 0.0).unwrap(), 4.0);
        assert_eq!(merged.str("f"), Some("1*r^1 on (0,1]"));
    }

    #[test]
    fn malformed_input() {
        assert!(Params::from_args(&["p3".to_string()]).is_err());
        assert!(Params::from_config_text("just words").is_err());
        let p = Params::from_args(&["p=abc".to_string()]).unwrap();
        assert!(p.f64_or("p", 1.0).is_err());
        assert!(p.expect_only(&["q"]).is_err());
        assert!(p.expect_only(&["p"]).is_ok());
    }

    #[test]
    fn lists() {
        let p = Params::from_args(&["beta=0.5, 0.25".to_string()]).unwrap();
        assert_eq!(p.list_or("beta", &[]).unwrap(), vec![0.5, 0.25]);
        assert_eq!(p.list_or("p", &[3.0]).unwrap(), vec![3.0]);
    }
}
