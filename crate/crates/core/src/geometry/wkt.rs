//! Well-known text reader and writer for the supported simple-feature types.

use super::{Coord, Geometry, GeometryError, Polygon, Region, Result, Ring, EPS_COORD};
use std::fmt::Write as _;

/// Formats a number with at most 12 significant digits, trailing zeros
/// removed and `.` as decimal separator. When 12 digits would move the value
/// by more than half of `EPS_COORD` (large projected coordinates), the
/// shortest exact representation is used instead.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let s = format_significant(v, 12);
    match s.parse::<f64>() {
        Ok(back) if (back - v).abs() <= 0.5 * EPS_COORD => s,
        _ => format!("{v}"),
    }
}

fn format_significant(v: f64, digits: usize) -> String {
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits_str: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let digits_str = digits_str.trim_end_matches('0');
    let digits_str = if digits_str.is_empty() { "0" } else { digits_str };

    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if !(-12..=15).contains(&exp) {
        out.push_str(&digits_str[..1]);
        if digits_str.len() > 1 {
            out.push('.');
            out.push_str(&digits_str[1..]);
        }
        let _ = write!(out, "e{exp}");
        return out;
    }
    if exp < 0 {
        out.push_str("0.");
        for _ in 0..(-exp - 1) {
            out.push('0');
        }
        out.push_str(digits_str);
    } else {
        let int_len = exp as usize + 1;
        if digits_str.len() <= int_len {
            out.push_str(digits_str);
            for _ in digits_str.len()..int_len {
                out.push('0');
            }
        } else {
            out.push_str(&digits_str[..int_len]);
            out.push('.');
            out.push_str(&digits_str[int_len..]);
        }
    }
    out
}

fn write_coords(out: &mut String, coords: &[Coord]) {
    out.push('(');
    for (i, c) in coords.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&format_number(c.x));
        out.push(' ');
        out.push_str(&format_number(c.y));
    }
    out.push(')');
}

fn write_polygon(out: &mut String, poly: &Polygon) {
    out.push('(');
    for (i, ring) in poly.rings().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_coords(out, ring.coords());
    }
    out.push(')');
}

pub fn to_wkt(geom: &Geometry) -> Result<String> {
    let mut out = String::new();
    match geom {
        Geometry::Point(c) => {
            out.push_str("POINT ");
            write_coords(&mut out, std::slice::from_ref(c));
        }
        Geometry::MultiPoint(cs) => {
            out.push_str("MULTIPOINT (");
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_coords(&mut out, std::slice::from_ref(c));
            }
            out.push(')');
        }
        Geometry::PolyLine(parts) if parts.len() == 1 => {
            out.push_str("LINESTRING ");
            write_coords(&mut out, &parts[0]);
        }
        Geometry::PolyLine(parts) => {
            out.push_str("MULTILINESTRING (");
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_coords(&mut out, p);
            }
            out.push(')');
        }
        Geometry::Region(r) if r.polygons().len() == 1 => {
            out.push_str("POLYGON ");
            write_polygon(&mut out, &r.polygons()[0]);
        }
        Geometry::Region(r) if !r.is_empty() => {
            out.push_str("MULTIPOLYGON (");
            for (i, p) in r.polygons().iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_polygon(&mut out, p);
            }
            out.push(')');
        }
        Geometry::Region(_) | Geometry::None => return Err(GeometryError::EmptyGeometry),
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(GeometryError::WktSyntax { position: self.pos, message: message.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, ch: u8) -> Result<()> {
        match self.peek() {
            Some(c) if c == ch => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => self.err(format!("expected '{}', found '{}'", ch as char, c as char)),
            None => self.err(format!("expected '{}', found end of input", ch as char)),
        }
    }

    fn keyword(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected geometry keyword");
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).to_ascii_uppercase())
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && matches!(self.src[self.pos], b'0'..=b'9' | b'.' | b'-' | b'+' | b'e' | b'E') {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = start;
                self.err("expected a finite number")
            }
        }
    }

    fn coord(&mut self) -> Result<Coord> {
        let x = self.number()?;
        let y = self.number()?;
        Ok(Coord::new(x, y))
    }

    fn coord_list(&mut self) -> Result<Vec<Coord>> {
        self.expect(b'(')?;
        let mut out = vec![self.coord()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            out.push(self.coord()?);
        }
        self.expect(b')')?;
        Ok(out)
    }

    fn ring(&mut self) -> Result<Ring> {
        let start = self.pos;
        let coords = self.coord_list()?;
        Ring::closed(coords).map_err(|e| GeometryError::WktSyntax { position: start, message: e.to_string() })
    }

    fn polygon(&mut self) -> Result<Polygon> {
        let start = self.pos;
        self.expect(b'(')?;
        let outer = self.ring()?;
        let mut holes = Vec::new();
        while self.peek() == Some(b',') {
            self.pos += 1;
            holes.push(self.ring()?);
        }
        self.expect(b')')?;
        Polygon::new(outer, holes).map_err(|e| GeometryError::WktSyntax { position: start, message: e.to_string() })
    }

    fn list<T>(&mut self, mut item: impl FnMut(&mut Self) -> Result<T>) -> Result<Vec<T>> {
        self.expect(b'(')?;
        let mut out = vec![item(self)?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            out.push(item(self)?);
        }
        self.expect(b')')?;
        Ok(out)
    }

    fn geometry(&mut self) -> Result<Geometry> {
        let kw_pos = self.pos;
        let kw = self.keyword()?;
        let geom = match kw.as_str() {
            "POINT" => {
                self.expect(b'(')?;
                let c = self.coord()?;
                self.expect(b')')?;
                Geometry::Point(c)
            }
            "MULTIPOINT" => {
                // Both `MULTIPOINT ((1 2), (3 4))` and `MULTIPOINT (1 2, 3 4)`.
                let pts = self.list(|p| {
                    if p.peek() == Some(b'(') {
                        p.pos += 1;
                        let c = p.coord()?;
                        p.expect(b')')?;
                        Ok(c)
                    } else {
                        p.coord()
                    }
                })?;
                Geometry::MultiPoint(pts)
            }
            "LINESTRING" => {
                let cs = self.coord_list()?;
                if cs.len() < 2 {
                    return self.err("linestring needs at least two points");
                }
                Geometry::PolyLine(vec![cs])
            }
            "MULTILINESTRING" => {
                let parts = self.list(|p| p.coord_list())?;
                if parts.iter().any(|p| p.len() < 2) {
                    return self.err("linestring needs at least two points");
                }
                Geometry::PolyLine(parts)
            }
            "POLYGON" => Geometry::Region(Region::from(self.polygon()?)),
            "MULTIPOLYGON" => Geometry::Region(Region::new(self.list(|p| p.polygon())?)),
            other => {
                self.pos = kw_pos;
                return self.err(format!("unsupported geometry type {other}"));
            }
        };
        Ok(geom)
    }
}

pub fn from_wkt(text: &str) -> Result<Geometry> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let geom = p.geometry()?;
    if p.peek().is_some() {
        return p.err("trailing characters after geometry");
    }
    Ok(geom)
}
