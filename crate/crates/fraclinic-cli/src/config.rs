//! `key = value` config with `[section]` headers. `#` starts a comment.

use std::collections::BTreeMap;

use fraclinic::{Error, Result};

/// Keys accepted in each section. Sections `potential` and `matrix` also accept any numeric
/// parameter of the selected catalog entry.
const SCHEMA: &[(&str, &[&str])] = &[
    ("", &["mode", "seed"]),
    ("grid", &["x", "n"]),
    ("frac", &["s"]),
    ("potential", &["name", "ncomp"]),
    ("matrix", &["name"]),
    ("pin", &["a", "b", "datum", "alpha"]),
    ("solver", &["tol", "max_iter", "k_cut", "memory", "path_nodes"]),
    ("certify", &["t", "k_max", "a_mult", "eta", "layer_x", "layer_h"]),
    ("layer", &["x", "h"]),
    ("scaling", &["m", "eps"]),
    ("validate", &["cases"]),
];

const OPEN_SECTIONS: &[&str] = &["potential", "matrix"];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
    col: usize,
    key_col: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<(String, String), Entry>,
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut entries = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = raw.split('#').next().unwrap_or("");
            let trimmed = body.trim();
            if trimmed.is_empty() {
                continue;
            }
            let indent = body.len() - body.trim_start().len();
            let col0 = indent + 1;
            if let Some(rest) = trimmed.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Parse { line, col: col0, msg: "unterminated section header".into() })?
                    .trim();
                if !SCHEMA.iter().any(|(s, _)| *s == name) || name.is_empty() {
                    return Err(Error::Parse { line, col: col0 + 1, msg: format!("unknown section `{name}`") });
                }
                section = name.to_string();
                continue;
            }
            let eq = trimmed
                .find('=')
                .ok_or_else(|| Error::Parse { line, col: col0, msg: "expected `key = value`".into() })?;
            let key = trimmed[..eq].trim();
            let value = trimmed[eq + 1..].trim();
            if !is_ident(key) {
                return Err(Error::Parse { line, col: col0, msg: format!("bad key `{key}`") });
            }
            let known = SCHEMA.iter().find(|(s, _)| *s == section).map(|(_, keys)| keys.contains(&key)).unwrap_or(false);
            if !known && !OPEN_SECTIONS.contains(&section.as_str()) {
                let place = if section.is_empty() { "top level".to_string() } else { format!("section [{section}]") };
                return Err(Error::Parse { line, col: col0, msg: format!("unknown key `{key}` in {place}") });
            }
            if value.is_empty() {
                return Err(Error::Parse { line, col: col0 + eq + 1, msg: format!("missing value for `{key}`") });
            }
            let vcol = col0 + eq + 1 + (trimmed[eq + 1..].len() - trimmed[eq + 1..].trim_start().len());
            let entry = Entry { value: value.to_string(), line, col: vcol, key_col: col0 };
            if entries.insert((section.clone(), key.to_string()), entry).is_some() {
                return Err(Error::Parse { line, col: col0, msg: format!("duplicate key `{key}`") });
            }
        }
        Ok(Self { entries })
    }

    pub fn str(&self, section: &str, key: &str) -> Option<&str> {
        self.entries.get(&(section.to_string(), key.to_string())).map(|e| e.value.as_str())
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(section.to_string(), key.to_string()))
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        match self.entry(section, key) {
            None => Ok(default),
            Some(e) => e.value.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                line: e.line,
                col: e.col,
                msg: format!("`{key}` must be a finite number, got `{}`", e.value),
            }),
        }
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize> {
        match self.entry(section, key) {
            None => Ok(default),
            Some(e) => e.value.parse::<usize>().map_err(|_| Error::Parse {
                line: e.line,
                col: e.col,
                msg: format!("`{key}` must be a nonnegative integer, got `{}`", e.value),
            }),
        }
    }

    pub fn list_or(&self, section: &str, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.entry(section, key) {
            None => Ok(default.to_vec()),
            Some(e) => {
                let mut out = Vec::new();
                let mut col = e.col;
                for item in e.value.split(',') {
                    let v: f64 = item.trim().parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                        Error::Parse { line: e.line, col, msg: format!("not a number: `{}`", item.trim()) }
                    })?;
                    out.push(v);
                    col += item.len() + 1;
                }
                Ok(out)
            }
        }
    }

    /// Numeric entries of an open section other than the listed fixed keys.
    pub fn params(&self, section: &str, fixed: &[&str]) -> Result<BTreeMap<String, f64>> {
        let mut out = BTreeMap::new();
        for ((sec, key), e) in &self.entries {
            if sec == section && !fixed.contains(&key.as_str()) {
                let v = e.value.parse::<f64>().map_err(|_| Error::Parse {
                    line: e.line,
                    col: e.col,
                    msg: format!("parameter `{key}` must be numeric"),
                })?;
                out.insert(key.clone(), v);
            }
        }
        Ok(out)
    }

    /// Rejects catalog parameters that the selected entry does not take.
    pub fn check_params(&self, section: &str, fixed: &[&str], allowed: &[&str]) -> Result<()> {
        for ((sec, key), e) in &self.entries {
            if sec == section && !fixed.contains(&key.as_str()) && !allowed.contains(&key.as_str()) {
                return Err(Error::Parse {
                    line: e.line,
                    col: e.key_col,
                    msg: format!("unknown key `{key}` in section [{section}]"),
                });
            }
        }
        Ok(())
    }

    /// `section.key -> value`, for echoing into reports.
    pub fn echo(&self) -> BTreeMap<String, String> {
        self.entries
            .iter()
            .map(|((s, k), e)| (if s.is_empty() { k.clone() } else { format!("{s}.{k}") }, e.value.clone()))
            .collect()
    }
}
