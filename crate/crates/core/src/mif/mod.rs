//! MapInfo Interchange Format: a `.mif` file holding the header, schema and
//! geometries, paired with a `.mid` file of delimited attribute rows.
//!
//! Styling clauses (`Pen`, `Brush`, `Symbol`, `Center`, `Smooth`) are read and
//! discarded. Geometry keywords outside the supported set are hard errors.

mod coordsys;
mod parse;
mod write;

pub use coordsys::{coordsys_to_projection, coordsys_to_projection_with};
pub use parse::{parse_mif_mid, read_mif_mid};
pub use write::write_mif_mid;

use crate::geometry::Geometry;
use crate::schema::{AttrValue, ColumnDef};
use std::fmt;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MifFile {
    Mif,
    Mid,
}

impl fmt::Display for MifFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MifFile::Mif => "MIF",
            MifFile::Mid => "MID",
        })
    }
}

#[derive(Debug, Error)]
pub enum MifError {
    #[error("{file} line {line}: {message}")]
    Syntax { file: MifFile, line: usize, message: String },
    #[error("MID has {rows} rows but MIF has {features} features")]
    RowCountMismatch { features: usize, rows: usize },
    #[error("MID line {line}: cannot read column {column:?} as {expected}")]
    Type { line: usize, column: String, expected: String },
    #[error("table declares {0} columns but no MID file was given")]
    MissingMid(usize),
    #[error("unsupported coordinate system: {0}")]
    UnsupportedCoordSys(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: input is not valid UTF-8 (byte offset {offset})")]
    Encoding { path: PathBuf, offset: usize },
}

impl MifError {
    /// Line number for errors that have one.
    pub fn line(&self) -> Option<usize> {
        match self {
            MifError::Syntax { line, .. } | MifError::Type { line, .. } => Some(*line),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MifHeader {
    pub version: u32,
    pub charset: String,
    pub delimiter: char,
    /// Raw `CoordSys ...` clause when present.
    pub coordsys: Option<String>,
    pub columns: Vec<ColumnDef>,
}

impl Default for MifHeader {
    fn default() -> Self {
        Self { version: 300, charset: "Neutral".into(), delimiter: ',', coordsys: None, columns: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub geometry: Geometry,
    pub attrs: Vec<AttrValue>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    pub header: MifHeader,
    pub features: Vec<Feature>,
}

impl FeatureTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.columns.iter().position(|c| c.name.eq_ignore_ascii_case(name))
    }

    /// Attribute arity and type conformance for every feature.
    pub fn check_invariants(&self) -> Result<(), String> {
        let cols = &self.header.columns;
        for (i, f) in self.features.iter().enumerate() {
            if f.attrs.len() != cols.len() {
                return Err(format!("feature {i} has {} attributes, expected {}", f.attrs.len(), cols.len()));
            }
            if let Some((c, v)) = cols.iter().zip(&f.attrs).find(|(c, v)| !c.ctype.accepts(v)) {
                return Err(format!("feature {i}: value {v:?} does not fit column {}", c.name));
            }
        }
        Ok(())
    }

    /// Equality with geometry compared within `eps` and attributes exactly.
    pub fn approx_eq(&self, other: &FeatureTable, eps: f64) -> bool {
        self.header == other.header
            && self.features.len() == other.features.len()
            && self
                .features
                .iter()
                .zip(&other.features)
                .all(|(a, b)| a.attrs == b.attrs && a.geometry.approx_eq(&b.geometry, eps))
    }
}
