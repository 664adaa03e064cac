//! Tabular outputs in CSV or JSON, written byte-for-byte reproducibly.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Version of every table schema written by this tool.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Float(f64),
    Count(u64),
}

impl Cell {
    /// Shortest text that parses back to the same value.
    pub fn text(&self) -> String {
        match self {
            Cell::Float(x) => format!("{x:?}"),
            Cell::Count(n) => n.to_string(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Float(x) => serde_json::Value::from(*x),
            Cell::Count(n) => serde_json::Value::from(*n),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem and schema name, e.g. `fringe`.
    pub name: String,
    pub schema: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, schema: &'static str, columns: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            schema,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn file_name(&self, format: Format) -> String {
        format!("{}.{}", self.name, format.extension())
    }

    /// CSV with a leading `# clockinterf <schema> v<N>` line and LF endings.
    pub fn to_csv(&self) -> Vec<u8> {
        let mut out = format!("# clockinterf {} v{SCHEMA_VERSION}\n", self.schema).into_bytes();
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text))
                .expect("in-memory write");
        }
        out.extend(w.into_inner().expect("in-memory flush"));
        out
    }

    pub fn to_json(&self) -> Vec<u8> {
        let rows: Vec<Vec<serde_json::Value>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(Cell::json).collect())
            .collect();
        let doc = serde_json::json!({
            "schema": format!("clockinterf/{}/v{SCHEMA_VERSION}", self.schema),
            "columns": self.columns,
            "rows": rows,
        });
        let mut bytes = serde_json::to_vec_pretty(&doc).expect("serializable");
        bytes.push(b'\n');
        bytes
    }

    pub fn encode(&self, format: Format) -> Vec<u8> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
