//! Tabular outputs with content digests.
//!
//! CSV files carry a header row naming units, 17 significant digits per
//! number (round-trip exact); the SHA-256 of the exact bytes is returned and
//! recorded in the run manifest.

use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

use crate::cli::CliError;

#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Column {
        Column {
            name: name.to_string(),
            unit: unit.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Schema {
    pub columns: Vec<Column>,
}

impl Schema {
    pub fn new(columns: Vec<Column>) -> Schema {
        Schema { columns }
    }

    fn header(&self) -> String {
        self.columns
            .iter()
            .map(|c| {
                if c.unit.is_empty() {
                    c.name.clone()
                } else {
                    format!("{}({})", c.name, c.unit)
                }
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

/// Renders rows against the schema and writes the file; nothing is written
/// when a row does not conform. Returns the content digest.
pub fn write_csv(rows: &[Vec<f64>], schema: &Schema, path: &Path) -> Result<String, CliError> {
    for (i, row) in rows.iter().enumerate() {
        if row.len() != schema.columns.len() {
            return Err(CliError::Validation(format!(
                "row {i} has {} fields but the schema has {} columns",
                row.len(),
                schema.columns.len()
            )));
        }
    }
    let mut text = schema.header();
    text.push('\n');
    for row in rows {
        let rendered: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        text.push_str(&rendered.join(","));
        text.push('\n');
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, &text)?;
    Ok(sha256_hex(text.as_bytes()))
}

/// Pretty-printed JSON with trailing newline; returns the content digest.
pub fn write_json(value: &serde_json::Value, path: &Path) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("JSON encoding failed: {e}")))?;
    text.push('\n');
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, &text)?;
    Ok(sha256_hex(text.as_bytes()))
}
