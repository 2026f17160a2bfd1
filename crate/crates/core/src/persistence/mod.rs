//! Append-only session store, table export, and SVG rendering.
//!
//! Records are stored one JSON document per line. Every floating-point value
//! is written with nine significant digits, so a record read back from disk
//! re-serializes to the exact same line.

mod svg;
mod table;

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Number, Value};
use thiserror::Error;

use crate::analysis::{SessionKey, SessionRecord};
use crate::trace_model::{check_schema_version, TraceError};

pub use svg::{render_boxplot, render_overlay, render_template, render_template_with, OverlayOptions, RenderError};
pub use table::{detection_csv, global_stats_json, NO_VALUE};

pub const SIGNIFICANT_DIGITS: usize = 9;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("duplicate record {key}")]
    DuplicateRecord { key: SessionKey },
    #[error("record {key} not found")]
    NotFound { key: SessionKey },
    #[error("malformed key `{0}`: study and participant ids must be non-empty")]
    MalformedKey(String),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {source}")]
    Schema {
        line: usize,
        #[source]
        source: TraceError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Rounds to nine significant decimal digits.
pub fn quantize(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

fn quantize_value(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            let q = quantize(n.as_f64().expect("f64 number"));
            if let Some(num) = Number::from_f64(q) {
                *n = num;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(quantize_value),
        Value::Object(map) => map.values_mut().for_each(quantize_value),
        _ => {}
    }
}

/// Serializes to a single JSON line with quantized floats.
pub fn to_line<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let mut v = serde_json::to_value(value)?;
    quantize_value(&mut v);
    serde_json::to_string(&v)
}

/// The value as it reads back after a trip through the store.
pub fn quantized<T: Serialize + DeserializeOwned>(value: &T) -> Result<T, serde_json::Error> {
    serde_json::from_str(&to_line(value)?)
}

/// Session records keyed by (study, participant), persisted as NDJSON.
///
/// Writers must be serialized by the caller; each append is one `write` of a
/// full line followed by a flush.
#[derive(Debug)]
pub struct SessionStore {
    path: Option<PathBuf>,
    records: BTreeMap<SessionKey, SessionRecord>,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        Self {
            path: None,
            records: BTreeMap::new(),
        }
    }

    /// Opens a store file, creating nothing until the first write.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let mut records = BTreeMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: SessionRecord =
                    serde_json::from_str(&line).map_err(|source| StoreError::Parse { line: i + 1, source })?;
                check_schema_version(&record.schema_version)
                    .map_err(|source| StoreError::Schema { line: i + 1, source })?;
                let key = record.key();
                if records.insert(key.clone(), record).is_some() {
                    return Err(StoreError::DuplicateRecord { key });
                }
            }
        }
        Ok(Self {
            path: Some(path),
            records,
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, key: &SessionKey) -> bool {
        self.records.contains_key(key)
    }

    /// Appends a record. Existing keys are never overwritten.
    pub fn write_record(&mut self, record: &SessionRecord) -> Result<(), StoreError> {
        let key = record.key();
        if key.study_id.is_empty() || key.participant_id.is_empty() {
            return Err(StoreError::MalformedKey(key.to_string()));
        }
        if self.records.contains_key(&key) {
            return Err(StoreError::DuplicateRecord { key });
        }
        let line = to_line(record).map_err(|source| StoreError::Parse { line: 0, source })?;
        let stored: SessionRecord =
            serde_json::from_str(&line).map_err(|source| StoreError::Parse { line: 0, source })?;
        if let Some(path) = &self.path {
            let mut file = OpenOptions::new().create(true).append(true).open(path)?;
            file.write_all(format!("{line}\n").as_bytes())?;
            file.flush()?;
        }
        self.records.insert(key, stored);
        Ok(())
    }

    pub fn read_record(&self, key: &SessionKey) -> Result<SessionRecord, StoreError> {
        self.records
            .get(key)
            .cloned()
            .ok_or_else(|| StoreError::NotFound { key: key.clone() })
    }

    /// All records in key order.
    pub fn records(&self) -> impl Iterator<Item = &SessionRecord> {
        self.records.values()
    }

    /// Writes every record, in key order, to a fresh file.
    pub fn export(&self, path: impl AsRef<Path>) -> Result<(), StoreError> {
        let mut file = File::create(path)?;
        for record in self.records.values() {
            let line = to_line(record).map_err(|source| StoreError::Parse { line: 0, source })?;
            writeln!(file, "{line}")?;
        }
        Ok(())
    }
}
