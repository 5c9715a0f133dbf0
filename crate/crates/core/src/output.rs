//! Number formatting and provenance metadata shared by every written file.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TOOL_NAME: &str = "netputsim";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Marker written in place of a number for undefined cells.
pub const UNDEFINED: &str = "undefined";

/// Exact mode writes 17 significant digits (round-trips every f64); pretty
/// mode writes 6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NumberFormat {
    #[default]
    Exact,
    Pretty,
}

impl NumberFormat {
    pub fn from_pretty(pretty: bool) -> Self {
        if pretty {
            NumberFormat::Pretty
        } else {
            NumberFormat::Exact
        }
    }

    pub fn fmt(self, x: f64) -> String {
        if !x.is_finite() {
            return if x.is_nan() {
                "NaN".to_string()
            } else if x > 0.0 {
                "inf".to_string()
            } else {
                "-inf".to_string()
            };
        }
        match self {
            NumberFormat::Exact => format!("{x:.16e}"),
            NumberFormat::Pretty => {
                let a = x.abs();
                if x == 0.0 {
                    "0".to_string()
                } else if (1e-4..1e6).contains(&a) {
                    let decimals = (5 - a.log10().floor() as i32).max(0) as usize;
                    format!("{x:.decimals$}")
                } else {
                    format!("{x:.5e}")
                }
            }
        }
    }

    pub fn fmt_opt(self, x: Option<f64>) -> String {
        match x {
            Some(v) => self.fmt(v),
            None => UNDEFINED.to_string(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Provenance block: tool version, command, options and input digests.
/// Contains no timestamps so that reruns produce identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub options: BTreeMap<String, String>,
    /// input label -> sha256 of its bytes
    pub inputs: BTreeMap<String, String>,
}

impl Metadata {
    pub fn new(command: &str) -> Self {
        Metadata {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            options: BTreeMap::new(),
            inputs: BTreeMap::new(),
        }
    }

    pub fn option(mut self, key: &str, value: impl ToString) -> Self {
        self.options.insert(key.to_string(), value.to_string());
        self
    }

    pub fn input_bytes(mut self, label: &str, bytes: &[u8]) -> Self {
        self.inputs.insert(label.to_string(), sha256_hex(bytes));
        self
    }

    pub fn input_file(mut self, label: &str, path: impl AsRef<Path>) -> Result<Self> {
        self.inputs.insert(label.to_string(), sha256_file(path)?);
        Ok(self)
    }

    /// `# key: value` lines for the head of a CSV file.
    pub fn csv_comment(&self) -> String {
        let mut s = format!("# tool: {} {}\n# command: {}\n", self.tool, self.version, self.command);
        for (k, v) in &self.options {
            s.push_str(&format!("# option.{k}: {v}\n"));
        }
        for (k, v) in &self.inputs {
            s.push_str(&format!("# input.{k}.sha256: {v}\n"));
        }
        s
    }
}


/// Serialises `None` as the string `"undefined"`.
pub mod undefined_opt {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Cell {
        Value(f64),
        Marker(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => Cell::Value(*x),
            None => Cell::Marker(super::UNDEFINED.to_string()),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(match Cell::deserialize(d)? {
            Cell::Value(x) => Some(x),
            Cell::Marker(_) => None,
        })
    }
}
