//! Land-title numbers: the join pivot between graphic and alphanumeric
//! sources, written in three different layouts by the legacy systems.
//!
//! | format | layout                                  | example        |
//! |--------|-----------------------------------------|----------------|
//! | F1     | `NatureNumber/index`                    | `T1111/20`     |
//! | F2     | `Nature/Number/index`                   | `T/1111/20`    |
//! | F3     | `Conservation/Nature/Number/index`      | `03/T/1111/20` |
//!
//! Digit strings are stored verbatim and compared numerically.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

const MAX_CONSERVATION_DIGITS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TitleError {
    #[error("unparseable title number {0:?}")]
    Unparseable(String),
    /// Never produced: the grammars are disjoint by slash count.
    #[error("ambiguous title number {0:?}")]
    Ambiguous(String),
    #[error("format F3 requires a conservation code")]
    MissingConservation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TitleFormat {
    F1,
    F2,
    F3,
}

impl TitleFormat {
    pub const ALL: [TitleFormat; 3] = [TitleFormat::F1, TitleFormat::F2, TitleFormat::F3];

    pub fn as_str(&self) -> &'static str {
        match self {
            TitleFormat::F1 => "F1",
            TitleFormat::F2 => "F2",
            TitleFormat::F3 => "F3",
        }
    }
}

impl fmt::Display for TitleFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TitleFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(TitleFormat::F1),
            "f2" => Ok(TitleFormat::F2),
            "f3" => Ok(TitleFormat::F3),
            other => Err(format!("unknown title format {other:?} (expected f1, f2 or f3)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TitleKey {
    conservation: Option<String>,
    nature: char,
    number: String,
    index: String,
}

impl TitleKey {
    pub fn new(conservation: Option<&str>, nature: char, number: &str, index: &str) -> Result<Self, TitleError> {
        let raw = || {
            let c = conservation.map(|c| format!("{c}/")).unwrap_or_default();
            format!("{c}{nature}/{number}/{index}")
        };
        let valid_conservation =
            conservation.is_none_or(|c| is_digits(c) && c.len() <= MAX_CONSERVATION_DIGITS);
        if !(nature.is_ascii_uppercase() && is_digits(number) && is_digits(index) && valid_conservation)
            || strip_zeros(number) == "0"
        {
            return Err(TitleError::Unparseable(raw()));
        }
        Ok(TitleKey {
            conservation: conservation.map(str::to_string),
            nature,
            number: number.to_string(),
            index: index.to_string(),
        })
    }

    pub fn conservation(&self) -> Option<&str> {
        self.conservation.as_deref()
    }

    pub fn nature(&self) -> char {
        self.nature
    }

    pub fn number(&self) -> &str {
        &self.number
    }

    pub fn index(&self) -> &str {
        &self.index
    }

    pub fn with_conservation(&self, conservation: Option<&str>) -> TitleKey {
        TitleKey { conservation: conservation.map(str::to_string), ..self.clone() }
    }

    /// `X/num/idx` with leading zeros stripped: the bucket key shared by all
    /// spellings of one title regardless of conservation knowledge.
    pub fn core_key(&self) -> String {
        format!("{}/{}/{}", self.nature, strip_zeros(&self.number), strip_zeros(&self.index))
    }
}

impl fmt::Display for TitleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&canonical_key(self))
    }
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

fn strip_zeros(s: &str) -> &str {
    let t = s.trim_start_matches('0');
    if t.is_empty() {
        "0"
    } else {
        t
    }
}

fn numeric_eq(a: &str, b: &str) -> bool {
    strip_zeros(a) == strip_zeros(b)
}

fn single_letter(s: &str) -> Option<char> {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_ascii_uppercase() => Some(c),
        _ => None,
    }
}

/// Recognizes one of the three layouts after trimming and upper-casing.
pub fn parse_title(raw: &str) -> Result<(TitleKey, TitleFormat), TitleError> {
    let unparseable = || TitleError::Unparseable(raw.to_string());
    let text = raw.trim().to_uppercase();
    let parts: Vec<&str> = text.split('/').collect();
    let (key, format) = match parts[..] {
        [head, index] => {
            let nature = head.chars().next().filter(char::is_ascii_uppercase).ok_or_else(unparseable)?;
            let number = &head[nature.len_utf8()..];
            (TitleKey::new(None, nature, number, index), TitleFormat::F1)
        }
        [nature, number, index] => {
            let nature = single_letter(nature).ok_or_else(unparseable)?;
            (TitleKey::new(None, nature, number, index), TitleFormat::F2)
        }
        [conservation, nature, number, index] => {
            let nature = single_letter(nature).ok_or_else(unparseable)?;
            (TitleKey::new(Some(conservation), nature, number, index), TitleFormat::F3)
        }
        _ => return Err(unparseable()),
    };
    Ok((key.map_err(|_| unparseable())?, format))
}

pub fn format_title(key: &TitleKey, fmt: TitleFormat) -> Result<String, TitleError> {
    Ok(match fmt {
        TitleFormat::F1 => format!("{}{}/{}", key.nature, key.number, key.index),
        TitleFormat::F2 => format!("{}/{}/{}", key.nature, key.number, key.index),
        TitleFormat::F3 => {
            let c = key.conservation.as_deref().ok_or(TitleError::MissingConservation)?;
            format!("{c}/{}/{}/{}", key.nature, key.number, key.index)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TitleMatch {
    Same,
    Different,
    /// Same nature, number and index but two different conservation codes.
    Conflict,
}

pub fn same_title(a: &TitleKey, b: &TitleKey) -> TitleMatch {
    if a.nature != b.nature || !numeric_eq(&a.number, &b.number) || !numeric_eq(&a.index, &b.index) {
        return TitleMatch::Different;
    }
    match (&a.conservation, &b.conservation) {
        (Some(x), Some(y)) if !numeric_eq(x, y) => TitleMatch::Conflict,
        _ => TitleMatch::Same,
    }
}

/// `NN/X/num/idx`: conservation zero-padded to two digits (`??` when
/// unknown), number and index without leading zeros.
pub fn canonical_key(key: &TitleKey) -> String {
    let conservation = match &key.conservation {
        Some(c) => format!("{:0>2}", strip_zeros(c)),
        None => "??".to_string(),
    };
    format!("{conservation}/{}", key.core_key())
}

/// Reads a key written by [`canonical_key`].
pub fn parse_canonical_key(text: &str) -> Option<TitleKey> {
    let (conservation, rest) = text.split_once('/')?;
    let conservation = (conservation != "??").then_some(conservation);
    let mut parts = rest.split('/');
    let (nature, number, index) = (single_letter(parts.next()?)?, parts.next()?, parts.next()?);
    if parts.next().is_some() {
        return None;
    }
    TitleKey::new(conservation, nature, number, index).ok()
}

/// Optional vocabulary of accepted nature letters. Unknown letters are
/// reported as warnings, never as parse failures.
#[derive(Debug, Clone, Default)]
pub struct NatureWhitelist {
    letters: Option<BTreeSet<char>>,
}

impl NatureWhitelist {
    pub fn any() -> Self {
        Self { letters: None }
    }

    pub fn of(letters: impl IntoIterator<Item = char>) -> Self {
        Self { letters: Some(letters.into_iter().map(|c| c.to_ascii_uppercase()).collect()) }
    }

    pub fn is_known(&self, nature: char) -> bool {
        self.letters.as_ref().is_none_or(|set| set.contains(&nature))
    }
}
