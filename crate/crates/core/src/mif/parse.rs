use super::{Feature, FeatureTable, MifError, MifFile, MifHeader};
use crate::geometry::{classify_rings, Coord, Geometry, Polygon, Region, Ring};
use crate::schema::{parse_date, validate_columns, AttrValue, ColumnDef, ColumnType};
use std::collections::VecDeque;
use std::path::Path;

type Result<T> = std::result::Result<T, MifError>;

fn syntax<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(MifError::Syntax { file: MifFile::Mif, line, message: message.into() })
}

/// Reads both files from disk. A missing `.mid` path is allowed only for
/// tables without columns.
pub fn read_mif_mid(mif_path: &Path, mid_path: Option<&Path>) -> Result<FeatureTable> {
    let mif = read_utf8(mif_path)?;
    let mid = mid_path.map(read_utf8).transpose()?;
    parse_mif_mid(&mif, mid.as_deref())
}

fn read_utf8(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|source| MifError::Io { path: path.to_path_buf(), source })?;
    String::from_utf8(bytes).map_err(|e| MifError::Encoding {
        path: path.to_path_buf(),
        offset: e.utf8_error().valid_up_to(),
    })
}

/// Non-blank lines with 1-based numbers, CR stripped.
struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last_line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let iter: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty()),
        );
        Self { inner: iter.peekable(), last_line: 0 }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.inner.next();
        if let Some((n, _)) = item {
            self.last_line = n;
        }
        item
    }
}

fn keyword(line: &str) -> (String, &str) {
    let line = line.trim();
    let end = line.find(|c: char| c.is_whitespace() || c == '(').unwrap_or(line.len());
    (line[..end].to_ascii_uppercase(), line[end..].trim())
}

fn unquote(text: &str) -> Option<&str> {
    text.trim().strip_prefix('"')?.strip_suffix('"')
}

fn parse_header(lines: &mut Lines<'_>) -> Result<MifHeader> {
    let mut header = MifHeader::default();
    let Some((n, first)) = lines.next() else {
        return syntax(1, "empty MIF file");
    };
    let (kw, rest) = keyword(first);
    if kw != "VERSION" {
        return syntax(n, "MIF file must begin with a VERSION clause");
    }
    header.version = match rest.parse::<u32>() {
        Ok(v) if v >= 300 => v,
        _ => return syntax(n, format!("unsupported version {rest:?}")),
    };

    loop {
        let Some((n, line)) = lines.next() else {
            return syntax(lines.last_line, "missing DATA section");
        };
        let (kw, rest) = keyword(line);
        match kw.as_str() {
            "CHARSET" => match unquote(rest) {
                Some(cs) => header.charset = cs.to_string(),
                None => return syntax(n, "CHARSET expects a quoted name"),
            },
            "DELIMITER" => {
                let d = unquote(rest).map(|d| if d == "\\t" { "\t" } else { d });
                let mut chars = d.into_iter().flat_map(str::chars);
                match (chars.next(), chars.next()) {
                    (Some(c), None) if c != '"' && (c == '\t' || !c.is_control()) => header.delimiter = c,
                    _ => return syntax(n, "DELIMITER expects one quoted printable character"),
                }
            }
            "COORDSYS" => header.coordsys = Some(line.to_string()),
            "INDEX" | "UNIQUE" | "TRANSFORM" => {}
            "COLUMNS" => {
                let count: usize = match rest.parse() {
                    Ok(c) => c,
                    Err(_) => return syntax(n, format!("invalid column count {rest:?}")),
                };
                for _ in 0..count {
                    let Some((n, def)) = lines.next() else {
                        return syntax(lines.last_line, "missing column definition");
                    };
                    let (name, ty) = match def.split_once(char::is_whitespace) {
                        Some((name, ty)) => (name, ty.trim()),
                        None => return syntax(n, format!("column definition {def:?} has no type")),
                    };
                    let Some(ctype) = ColumnType::parse(ty) else {
                        return syntax(n, format!("unknown column type {ty:?}"));
                    };
                    header.columns.push(ColumnDef::new(name, ctype));
                    if let Err(msg) = validate_columns(&header.columns) {
                        return syntax(n, msg);
                    }
                }
            }
            "DATA" => {
                if !rest.is_empty() {
                    return syntax(n, "unexpected text after DATA");
                }
                return Ok(header);
            }
            _ => return syntax(n, format!("unknown header keyword {kw:?}")),
        }
    }
}

/// Numbers read token by token, continuing onto following lines as needed.
struct Numbers<'a, 'b> {
    lines: &'b mut Lines<'a>,
    pending: VecDeque<&'a str>,
    line: usize,
}

impl<'a, 'b> Numbers<'a, 'b> {
    fn new(lines: &'b mut Lines<'a>, line: usize, rest: &'a str) -> Self {
        Self { lines, pending: rest.split_whitespace().collect(), line }
    }

    fn token(&mut self) -> Result<&'a str> {
        while self.pending.is_empty() {
            match self.lines.next() {
                Some((n, l)) => {
                    self.line = n;
                    self.pending.extend(l.split_whitespace());
                }
                None => return syntax(self.lines.last_line, "unexpected end of file inside a geometry"),
            }
        }
        Ok(self.pending.pop_front().unwrap())
    }

    fn number(&mut self) -> Result<f64> {
        let tok = self.token()?;
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => syntax(self.line, format!("expected a number, found {tok:?}")),
        }
    }

    fn count(&mut self) -> Result<usize> {
        let tok = self.token()?;
        tok.parse().or_else(|_| syntax(self.line, format!("expected a count, found {tok:?}")))
    }

    fn coord(&mut self) -> Result<Coord> {
        Ok(Coord::new(self.number()?, self.number()?))
    }

    fn coords(&mut self, n: usize) -> Result<Vec<Coord>> {
        (0..n).map(|_| self.coord()).collect()
    }

    fn finish(self) -> Result<()> {
        match self.pending.front() {
            None => Ok(()),
            Some(tok) => syntax(self.line, format!("unexpected token {tok:?} after geometry")),
        }
    }

    fn peek_keyword(&mut self, kw: &str) -> bool {
        if self.pending.front().is_some_and(|t| t.eq_ignore_ascii_case(kw)) {
            self.pending.pop_front();
            true
        } else {
            false
        }
    }
}

const STYLE_CLAUSES: [&str; 5] = ["PEN", "BRUSH", "SYMBOL", "CENTER", "SMOOTH"];

fn parse_geometry<'a>(lines: &mut Lines<'a>, n: usize, line: &'a str) -> Result<Geometry> {
    let (kw, _) = keyword(line);
    let rest = line.trim()[kw.len()..].trim();
    let mut nums = Numbers::new(lines, n, rest);
    let geom_err = |line: usize, e: crate::geometry::GeometryError| MifError::Syntax {
        file: MifFile::Mif,
        line,
        message: e.to_string(),
    };
    let geom = match kw.as_str() {
        "NONE" => Geometry::None,
        "POINT" => {
            let c = nums.coord()?;
            Geometry::Point(c)
        }
        "MULTIPOINT" => {
            let count = nums.count()?;
            if count == 0 {
                return syntax(n, "MULTIPOINT needs at least one point");
            }
            Geometry::MultiPoint(nums.coords(count)?)
        }
        "LINE" => {
            let pts = nums.coords(2)?;
            Geometry::PolyLine(vec![pts])
        }
        "PLINE" => {
            let parts = if nums.peek_keyword("MULTIPLE") {
                let sections = nums.count()?;
                let mut parts = Vec::with_capacity(sections);
                for _ in 0..sections {
                    let count = nums.count()?;
                    parts.push(nums.coords(count)?);
                }
                parts
            } else {
                let count = nums.count()?;
                vec![nums.coords(count)?]
            };
            Geometry::polyline(parts).map_err(|e| geom_err(n, e))?
        }
        "REGION" => {
            let ring_count = nums.count()?;
            if ring_count == 0 {
                return syntax(n, "REGION needs at least one ring");
            }
            let mut rings = Vec::with_capacity(ring_count);
            for _ in 0..ring_count {
                let count = nums.count()?;
                let ring_line = nums.line;
                let coords = nums.coords(count)?;
                rings.push(Ring::new(coords).map_err(|e| geom_err(ring_line, e))?);
            }
            let polygons = classify_rings(rings).map_err(|e| geom_err(n, e))?;
            Geometry::Region(Region::new(polygons))
        }
        "RECT" => {
            let (a, b) = (nums.coord()?, nums.coord()?);
            let poly = Polygon::rect(a.x, a.y, b.x, b.y).map_err(|e| geom_err(n, e))?;
            Geometry::Region(Region::from(poly))
        }
        _ => return syntax(n, format!("unsupported geometry keyword {kw:?}")),
    };
    nums.finish()?;
    Ok(geom)
}

fn parse_data(lines: &mut Lines<'_>) -> Result<Vec<Geometry>> {
    let mut out = Vec::new();
    while let Some((n, line)) = lines.next() {
        let (kw, _) = keyword(line);
        if STYLE_CLAUSES.contains(&kw.as_str()) {
            continue;
        }
        out.push(parse_geometry(lines, n, line)?);
    }
    Ok(out)
}

/// One MID cell: its text and whether it was quoted.
fn split_row(line: &str, delimiter: char, line_no: usize) -> Result<Vec<(String, bool)>> {
    let mut cells = Vec::new();
    let mut chars = line.chars().peekable();
    loop {
        let mut cell = String::new();
        let mut quoted = false;
        if chars.peek() == Some(&'"') {
            quoted = true;
            chars.next();
            loop {
                match chars.next() {
                    Some('"') if chars.peek() == Some(&'"') => {
                        chars.next();
                        cell.push('"');
                    }
                    Some('"') => break,
                    Some(c) => cell.push(c),
                    None => {
                        return Err(MifError::Syntax {
                            file: MifFile::Mid,
                            line: line_no,
                            message: "unterminated quoted cell".into(),
                        })
                    }
                }
            }
            // tolerate whitespace between the closing quote and the delimiter
            while chars.peek().is_some_and(|c| *c != delimiter && c.is_whitespace()) {
                chars.next();
            }
            if chars.peek().is_some_and(|c| *c != delimiter) {
                return Err(MifError::Syntax {
                    file: MifFile::Mid,
                    line: line_no,
                    message: "text after closing quote".into(),
                });
            }
        } else {
            while let Some(&c) = chars.peek() {
                if c == delimiter {
                    break;
                }
                cell.push(c);
                chars.next();
            }
        }
        cells.push((cell, quoted));
        match chars.next() {
            Some(_) => continue,
            None => return Ok(cells),
        }
    }
}

fn coerce(cell: &str, quoted: bool, ctype: ColumnType) -> Option<AttrValue> {
    if let ColumnType::Char(_) = ctype {
        let v = if !quoted && cell.is_empty() { AttrValue::Null } else { AttrValue::Text(cell.to_string()) };
        return ctype.accepts(&v).then_some(v);
    }
    let t = cell.trim();
    if t.is_empty() {
        return Some(AttrValue::Null);
    }
    let v = match ctype {
        ColumnType::Integer | ColumnType::SmallInt => AttrValue::Int(t.parse().ok()?),
        ColumnType::Float | ColumnType::Decimal { .. } => AttrValue::Real(t.parse::<f64>().ok().filter(|v| v.is_finite())?),
        ColumnType::Date => AttrValue::Date(parse_date(t)?),
        ColumnType::Logical => AttrValue::Bool(match t.to_ascii_uppercase().as_str() {
            "T" | "TRUE" | "Y" | "YES" | "1" => true,
            "F" | "FALSE" | "N" | "NO" | "0" => false,
            _ => return None,
        }),
        ColumnType::Char(_) => unreachable!(),
    };
    ctype.accepts(&v).then_some(v)
}

fn parse_mid(text: &str, header: &MifHeader) -> Result<Vec<Vec<AttrValue>>> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if header.columns.is_empty() {
            if !raw.trim().is_empty() {
                return Err(MifError::Syntax {
                    file: MifFile::Mid,
                    line: line_no,
                    message: "row has cells but the table declares no columns".into(),
                });
            }
            rows.push(Vec::new());
            continue;
        }
        let cells = split_row(raw, header.delimiter, line_no)?;
        if cells.len() != header.columns.len() {
            return Err(MifError::Syntax {
                file: MifFile::Mid,
                line: line_no,
                message: format!("expected {} cells, found {}", header.columns.len(), cells.len()),
            });
        }
        let row = cells
            .iter()
            .zip(&header.columns)
            .map(|((cell, quoted), col)| {
                coerce(cell, *quoted, col.ctype).ok_or_else(|| MifError::Type {
                    line: line_no,
                    column: col.name.clone(),
                    expected: col.ctype.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Parses a MIF text and its optional MID companion into one table.
pub fn parse_mif_mid(mif_text: &str, mid_text: Option<&str>) -> Result<FeatureTable> {
    let mut lines = Lines::new(mif_text);
    let header = parse_header(&mut lines)?;
    let geometries = parse_data(&mut lines)?;

    let rows = match mid_text {
        Some(text) => parse_mid(text, &header)?,
        None if header.columns.is_empty() => vec![Vec::new(); geometries.len()],
        None => return Err(MifError::MissingMid(header.columns.len())),
    };
    if rows.len() != geometries.len() {
        return Err(MifError::RowCountMismatch { features: geometries.len(), rows: rows.len() });
    }
    let features = geometries.into_iter().zip(rows).map(|(geometry, attrs)| Feature { geometry, attrs }).collect();
    Ok(FeatureTable { header, features })
}
