//! Attribute schema shared by the interchange reader, the parcel store and
//! the selection predicates.

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnType {
    Char(u16),
    Integer,
    SmallInt,
    Float,
    Decimal { width: u8, precision: u8 },
    Date,
    Logical,
}

impl ColumnType {
    /// Whether a value may be stored in a column of this type. `Null` fits anywhere.
    pub fn accepts(&self, value: &AttrValue) -> bool {
        match (self, value) {
            (_, AttrValue::Null) => true,
            (ColumnType::Char(n), AttrValue::Text(s)) => s.chars().count() <= *n as usize,
            (ColumnType::Integer, AttrValue::Int(_)) => true,
            (ColumnType::SmallInt, AttrValue::Int(v)) => i16::try_from(*v).is_ok(),
            (ColumnType::Float | ColumnType::Decimal { .. }, AttrValue::Real(v)) => v.is_finite(),
            (ColumnType::Date, AttrValue::Date(_)) => true,
            (ColumnType::Logical, AttrValue::Bool(_)) => true,
            _ => false,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, ColumnType::Integer | ColumnType::SmallInt | ColumnType::Float | ColumnType::Decimal { .. })
    }

    /// Parses the MIF spelling, e.g. `Char(20)`, `Decimal (10, 2)`, `Integer`.
    pub fn parse(text: &str) -> Option<ColumnType> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
        let args = |prefix: &str| -> Option<Vec<u32>> {
            let inner = compact.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
            inner.split(',').map(|p| p.parse().ok()).collect()
        };
        Some(match compact.as_str() {
            "integer" => ColumnType::Integer,
            "smallint" => ColumnType::SmallInt,
            "float" => ColumnType::Float,
            "date" => ColumnType::Date,
            "logical" => ColumnType::Logical,
            _ if compact.starts_with("char") => match args("char")?[..] {
                [n] if (1..=u16::MAX as u32).contains(&n) => ColumnType::Char(n as u16),
                _ => return None,
            },
            _ if compact.starts_with("decimal") => match args("decimal")?[..] {
                [w, p] if w >= p && w <= u8::MAX as u32 => ColumnType::Decimal { width: w as u8, precision: p as u8 },
                _ => return None,
            },
            _ => return None,
        })
    }
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnType::Char(n) => write!(f, "Char({n})"),
            ColumnType::Integer => f.write_str("Integer"),
            ColumnType::SmallInt => f.write_str("SmallInt"),
            ColumnType::Float => f.write_str("Float"),
            ColumnType::Decimal { width, precision } => write!(f, "Decimal({width},{precision})"),
            ColumnType::Date => f.write_str("Date"),
            ColumnType::Logical => f.write_str("Logical"),
        }
    }
}

impl Serialize for ColumnType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ColumnType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        ColumnType::parse(&text).ok_or_else(|| serde::de::Error::custom(format!("unknown column type {text:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    #[serde(rename = "type")]
    pub ctype: ColumnType,
}

impl ColumnDef {
    pub fn new(name: impl Into<String>, ctype: ColumnType) -> Self {
        Self { name: name.into(), ctype }
    }
}

/// Valid column identifier: a letter or underscore followed by letters, digits or underscores.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

/// Checks non-empty, case-insensitively unique column names.
pub fn validate_columns(columns: &[ColumnDef]) -> Result<(), String> {
    let mut seen = std::collections::HashSet::new();
    for col in columns {
        if !is_identifier(&col.name) {
            return Err(format!("invalid column name {:?}", col.name));
        }
        if !seen.insert(col.name.to_lowercase()) {
            return Err(format!("duplicate column name {:?}", col.name));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Text(String),
    Int(i64),
    Real(f64),
    Bool(bool),
    Date(NaiveDate),
    Null,
}

impl AttrValue {
    pub fn is_null(&self) -> bool {
        matches!(self, AttrValue::Null)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AttrValue::Int(v) => Some(*v as f64),
            AttrValue::Real(v) => Some(*v),
            AttrValue::Text(s) => s.trim().parse::<f64>().ok().filter(|v| v.is_finite()),
            _ => None,
        }
    }

    /// Plain-text rendering used for reports and text coercion.
    pub fn to_text(&self) -> String {
        match self {
            AttrValue::Text(s) => s.clone(),
            AttrValue::Int(v) => v.to_string(),
            AttrValue::Real(v) => v.to_string(),
            AttrValue::Bool(b) => if *b { "T" } else { "F" }.to_string(),
            AttrValue::Date(d) => format_date(d),
            AttrValue::Null => String::new(),
        }
    }

    /// Infers a value from untyped text: integer, then real, else text. Empty is null.
    pub fn infer(text: &str) -> AttrValue {
        let t = text.trim();
        if t.is_empty() {
            AttrValue::Null
        } else if let Ok(v) = t.parse::<i64>() {
            AttrValue::Int(v)
        } else if let Some(v) = t.parse::<f64>().ok().filter(|v| v.is_finite()) {
            AttrValue::Real(v)
        } else {
            AttrValue::Text(text.to_string())
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::Value;
        match self {
            AttrValue::Text(s) => Value::String(s.clone()),
            AttrValue::Int(v) => Value::from(*v),
            AttrValue::Real(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            AttrValue::Bool(b) => Value::Bool(*b),
            AttrValue::Date(d) => Value::String(format_date(d)),
            AttrValue::Null => Value::Null,
        }
    }

    /// Decodes a JSON value written by [`AttrValue::to_json`] for a column of type `ctype`.
    pub fn from_json(value: &serde_json::Value, ctype: ColumnType) -> Option<AttrValue> {
        use serde_json::Value;
        let v = match (ctype, value) {
            (_, Value::Null) => AttrValue::Null,
            (ColumnType::Char(_), Value::String(s)) => AttrValue::Text(s.clone()),
            (ColumnType::Integer | ColumnType::SmallInt, Value::Number(n)) => AttrValue::Int(n.as_i64()?),
            (ColumnType::Float | ColumnType::Decimal { .. }, Value::Number(n)) => AttrValue::Real(n.as_f64()?),
            (ColumnType::Date, Value::String(s)) => AttrValue::Date(parse_date(s)?),
            (ColumnType::Logical, Value::Bool(b)) => AttrValue::Bool(*b),
            _ => return None,
        };
        ctype.accepts(&v).then_some(v)
    }
}

/// `YYYYMMDD`
pub fn format_date(d: &NaiveDate) -> String {
    format!("{:04}{:02}{:02}", d.year(), d.month(), d.day())
}

pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    if s.len() != 8 || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    NaiveDate::from_ymd_opt(s[0..4].parse().ok()?, s[4..6].parse().ok()?, s[6..8].parse().ok()?)
}
