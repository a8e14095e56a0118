use super::{AlphaRecord, IntegrationError};
use crate::schema::AttrValue;
use std::collections::BTreeMap;
use std::io::Read;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaMapping {
    pub title_column: String,
    pub area_column: Option<String>,
}

impl AlphaMapping {
    pub fn new(title_column: impl Into<String>) -> Self {
        AlphaMapping { title_column: title_column.into(), area_column: None }
    }
}

fn syntax(e: csv::Error) -> IntegrationError {
    let line = e.position().map_or(0, |p| p.line());
    IntegrationError::CsvSyntax { line, message: e.to_string() }
}

/// Reads a headed CSV table. Every column except the title column becomes
/// an attribute, numeric where the text parses as a number. Row ids count
/// data rows from 1.
pub fn load_alpha_csv(
    reader: impl Read,
    source_id: &str,
    mapping: &AlphaMapping,
) -> Result<Vec<AlphaRecord>, IntegrationError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers().map_err(syntax)?.iter().map(|h| h.trim().to_string()).collect();
    let position = |name: &str| headers.iter().position(|h| h == name);
    let title_idx = position(&mapping.title_column).ok_or_else(|| IntegrationError::MissingColumn(mapping.title_column.clone()))?;
    if let Some(area) = &mapping.area_column {
        position(area).ok_or_else(|| IntegrationError::MissingColumn(area.clone()))?;
    }
    for (i, h) in headers.iter().enumerate() {
        if headers[..i].contains(h) {
            return Err(IntegrationError::DuplicateColumn(h.clone()));
        }
    }
    let mut out = Vec::new();
    for (n, row) in rdr.records().enumerate() {
        let row = row.map_err(syntax)?;
        let mut attributes = BTreeMap::new();
        for (i, cell) in row.iter().enumerate() {
            if i != title_idx {
                attributes.insert(headers[i].clone(), AttrValue::infer(cell));
            }
        }
        out.push(AlphaRecord {
            source_id: source_id.to_string(),
            row_id: n as u64 + 1,
            raw_title: row[title_idx].trim().to_string(),
            attributes,
        });
    }
    Ok(out)
}
