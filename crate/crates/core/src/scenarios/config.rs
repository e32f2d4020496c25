//! Scenario configuration: a TOML table of defaults, merged with TOML
//! documents and dotted `key=value` overrides. Keys must already exist in the
//! defaults and keep their type; `tol.<assertion>` entries replace assertion
//! tolerances.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use toml::{Table, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    table: Table,
    tolerances: BTreeMap<String, f64>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Reals with an optional factor of π: `0.5`, `pi`, `-pi/2`, `3pi/4`, `2*pi`.
pub fn parse_real(text: &str) -> Result<f64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    let bad = || config_err(format!("`{text}` is not a real number"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().map_err(|_| bad())?),
        None => (s.as_str(), 1.0),
    };
    let coef = num.strip_suffix("pi").ok_or_else(bad)?;
    let coef = coef.strip_suffix('*').unwrap_or(coef);
    let c = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(c * PI / den)
}

/// Reads `raw` with the type of `like`.
fn coerce(raw: &str, like: &Value, key: &str) -> Result<Value> {
    let raw = raw.trim();
    let mismatch = |what: &str| config_err(format!("`{key}` expects {what}, got `{raw}`"));
    Ok(match like {
        Value::String(_) => Value::String(raw.trim_matches('"').to_owned()),
        Value::Float(_) => Value::Float(parse_real(raw)?),
        Value::Integer(_) => {
            let v = raw
                .parse::<i64>()
                .ok()
                .or_else(|| raw.parse::<f64>().ok().filter(|v| v.fract() == 0.0 && v.abs() < 9e15).map(|v| v as i64))
                .ok_or_else(|| mismatch("an integer"))?;
            Value::Integer(v)
        }
        Value::Boolean(_) => Value::Boolean(raw.parse::<bool>().map_err(|_| mismatch("true or false"))?),
        Value::Array(items) => {
            let inner = raw.trim_start_matches('[').trim_end_matches(']');
            let template = items.first().cloned().unwrap_or(Value::Float(0.0));
            Value::Array(
                inner
                    .split(',')
                    .filter(|p| !p.trim().is_empty())
                    .map(|p| coerce(p, &template, key))
                    .collect::<Result<_>>()?,
            )
        }
        _ => return Err(mismatch("a scalar")),
    })
}

/// Same kind, allowing an integer where a float is expected.
fn conform(new: Value, like: &Value, key: &str) -> Result<Value> {
    match (like, new) {
        (Value::Float(_), Value::Integer(i)) => Ok(Value::Float(i as f64)),
        (Value::Array(l), Value::Array(items)) => {
            let template = l.first().cloned().unwrap_or(Value::Float(0.0));
            Ok(Value::Array(
                items
                    .into_iter()
                    .map(|v| conform(v, &template, key))
                    .collect::<Result<_>>()?,
            ))
        }
        (l, n) if std::mem::discriminant(l) == std::mem::discriminant(&n) => Ok(n),
        (l, n) => Err(config_err(format!(
            "`{key}` expects a {}, got a {}",
            l.type_str(),
            n.type_str()
        ))),
    }
}

impl Config {
    pub fn from_defaults(text: &str) -> Result<Self> {
        let table = toml::from_str::<Table>(text).map_err(|e| config_err(e.to_string()))?;
        Ok(Self {
            table,
            tolerances: BTreeMap::new(),
        })
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn tolerances(&self) -> &BTreeMap<String, f64> {
        &self.tolerances
    }

    pub fn has(&self, key: &str) -> bool {
        self.lookup(key).is_ok()
    }

    /// Overlays a TOML document; a top-level `[tol]` table sets tolerances.
    pub fn merge_toml(&mut self, text: &str) -> Result<()> {
        let doc = toml::from_str::<Table>(text).map_err(|e| config_err(e.to_string()))?;
        self.merge_table(doc, "")
    }

    fn merge_table(&mut self, doc: Table, prefix: &str) -> Result<()> {
        for (k, v) in doc {
            let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            if path == "tol" {
                let Value::Table(t) = v else {
                    return Err(config_err("`tol` must be a table"));
                };
                for (name, tol) in t {
                    let x = match tol {
                        Value::Float(f) => f,
                        Value::Integer(i) => i as f64,
                        Value::String(s) => parse_real(&s)?,
                        other => return Err(config_err(format!("tol.{name}: not a number: {other}"))),
                    };
                    self.tolerances.insert(name, x);
                }
                continue;
            }
            match v {
                Value::Table(t) => self.merge_table(t, &path)?,
                v => {
                    let slot = self.lookup_mut(&path)?;
                    *slot = conform(v, slot, &path)?;
                }
            }
        }
        Ok(())
    }

    /// `key=value` with a dotted key.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| config_err(format!("`{assignment}` is not key=value")))?;
        self.set(k.trim(), v)
    }

    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        if let Some(name) = key.strip_prefix("tol.") {
            self.tolerances.insert(name.to_owned(), parse_real(raw)?);
            return Ok(());
        }
        let slot = self.lookup_mut(key)?;
        *slot = coerce(raw, slot, key)?;
        Ok(())
    }

    fn lookup(&self, key: &str) -> Result<&Value> {
        let mut parts = key.split('.');
        let first = parts.next().unwrap_or_default();
        let mut cur = self
            .table
            .get(first)
            .ok_or_else(|| config_err(format!("unknown parameter `{key}`")))?;
        for p in parts {
            cur = cur
                .as_table()
                .and_then(|t| t.get(p))
                .ok_or_else(|| config_err(format!("unknown parameter `{key}`")))?;
        }
        Ok(cur)
    }

    fn lookup_mut(&mut self, key: &str) -> Result<&mut Value> {
        let unknown = || config_err(format!("unknown parameter `{key}`"));
        let mut parts = key.split('.');
        let first = parts.next().unwrap_or_default();
        let mut cur = self.table.get_mut(first).ok_or_else(unknown)?;
        for p in parts {
            cur = cur.as_table_mut().and_then(|t| t.get_mut(p)).ok_or_else(unknown)?;
        }
        if cur.is_table() {
            return Err(config_err(format!("`{key}` is a table, not a parameter")));
        }
        Ok(cur)
    }

    pub fn real(&self, key: &str) -> Result<f64> {
        match self.lookup(key)? {
            Value::Float(f) => Ok(*f),
            Value::Integer(i) => Ok(*i as f64),
            v => Err(config_err(format!("`{key}` is a {}, not a number", v.type_str()))),
        }
    }

    pub fn count(&self, key: &str) -> Result<usize> {
        match self.lookup(key)? {
            Value::Integer(i) if *i >= 0 => Ok(*i as usize),
            v => Err(config_err(format!("`{key}` must be a non-negative integer, got {v}"))),
        }
    }

    pub fn text(&self, key: &str) -> Result<&str> {
        self.lookup(key)?
            .as_str()
            .ok_or_else(|| config_err(format!("`{key}` is not a string")))
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        self.lookup(key)?
            .as_bool()
            .ok_or_else(|| config_err(format!("`{key}` is not a boolean")))
    }

    pub fn reals(&self, key: &str) -> Result<Vec<f64>> {
        let items = self
            .lookup(key)?
            .as_array()
            .ok_or_else(|| config_err(format!("`{key}` is not a list")))?;
        items
            .iter()
            .map(|v| match v {
                Value::Float(f) => Ok(*f),
                Value::Integer(i) => Ok(*i as f64),
                v => Err(config_err(format!("`{key}` holds a {}", v.type_str()))),
            })
            .collect()
    }

    /// Rejects values outside `[lo, hi]`.
    pub fn real_in(&self, key: &str, lo: f64, hi: f64) -> Result<f64> {
        let v = self.real(key)?;
        if !(lo..=hi).contains(&v) {
            return Err(config_err(format!("`{key}` = {v} must lie in [{lo}, {hi}]")));
        }
        Ok(v)
    }

    pub fn one_of<'a>(&'a self, key: &str, allowed: &[&str]) -> Result<&'a str> {
        let v = self.text(key)?;
        if !allowed.contains(&v) {
            return Err(config_err(format!("`{key}` must be one of {allowed:?}, got `{v}`")));
        }
        Ok(v)
    }
}
