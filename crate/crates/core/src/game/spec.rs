//! On-disk game specification.
//!
//! The canonical writer is [`GameSpecFile::to_canonical_json`]; loading a
//! canonically written file and re-serializing reproduces it byte for byte.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpecFile {
    pub family: String,
    pub n: usize,
    pub k: usize,
    pub gamma: f64,
    /// Realized type assignment, one name per player.
    pub types: Vec<String>,
    /// Family-specific parameters.
    #[serde(default)]
    pub params: Value,
    /// Reserved opt-out action index, when the family declares one.
    #[serde(default)]
    pub null_action: Option<usize>,
}

impl GameSpecFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Canonical serialization: pretty-printed with a trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("spec serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_canonical_json())?;
        Ok(())
    }
}
