//! Structured text configs: `[section]` headers over `key = value` lines.
//!
//! Values are either a bare token or a comma pair `re, im`. `#` starts a
//! comment. Dispersions serialize into a `[dispersion]` section whose keys
//! are the integer harmonics, e.g. `-1 = 0.15, 0`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::Dispersion;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigDoc {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigDoc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = Self::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| {
                    Error::InvalidConfig(format!("line {}: unterminated section header", lineno + 1))
                })?;
                section = name.trim().to_string();
                doc.sections.entry(section.clone()).or_default();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            doc.sections
                .entry(section.clone())
                .or_default()
                .insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(doc)
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl ToString) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.to_string());
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.get(section).is_some_and(|s| !s.is_empty())
    }

    pub fn keys(&self, section: &str) -> impl Iterator<Item = &str> {
        self.sections
            .get(section)
            .into_iter()
            .flat_map(|s| s.keys().map(|k| k.as_str()))
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(|s| s.as_str())
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(s) => s
                .parse::<f64>()
                .map(Some)
                .map_err(|_| Error::InvalidConfig(format!("{section}.{key}: bad float `{s}`"))),
        }
    }

    pub fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(s) => s
                .parse::<usize>()
                .map(Some)
                .map_err(|_| Error::InvalidConfig(format!("{section}.{key}: bad integer `{s}`"))),
        }
    }

    /// A scalar or a `re, im` pair, returned as a complex number.
    pub fn get_complex(&self, section: &str, key: &str) -> Result<Option<Complex64>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(s) => parse_complex(s)
                .map(Some)
                .map_err(|_| Error::InvalidConfig(format!("{section}.{key}: bad value `{s}`"))),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, entries) in &self.sections {
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(&format!("[{name}]\n"));
            for (k, v) in entries {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }
}

fn parse_complex(s: &str) -> std::result::Result<Complex64, ()> {
    let mut parts = s.split(',').map(str::trim);
    let re = parts.next().ok_or(())?.parse::<f64>().map_err(|_| ())?;
    let im = match parts.next() {
        Some(p) => p.parse::<f64>().map_err(|_| ())?,
        None => 0.0,
    };
    if parts.next().is_some() {
        return Err(());
    }
    Ok(Complex64::new(re, im))
}

/// Serializes a dispersion as a `[dispersion]` section.
pub fn dispersion_to_config(disp: &Dispersion) -> ConfigDoc {
    let mut doc = ConfigDoc::new();
    for (l, c) in disp.coefficients() {
        doc.set("dispersion", &l.to_string(), format!("{:e}, {:e}", c.re, c.im));
    }
    doc
}

/// Reads a dispersion back from a `[dispersion]` section.
pub fn dispersion_from_config(doc: &ConfigDoc) -> Result<Dispersion> {
    let mut pairs = Vec::new();
    for key in doc.keys("dispersion") {
        let l: i32 = key
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("dispersion key `{key}` is not an integer")))?;
        let v = doc
            .get_complex("dispersion", key)?
            .expect("key exists by construction");
        pairs.push((l, v));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidConfig("no [dispersion] coefficients".into()));
    }
    Dispersion::from_pairs(&pairs)
}
