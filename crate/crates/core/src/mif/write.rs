use super::FeatureTable;
use crate::geometry::{Coord, Geometry};
use crate::schema::{format_date, AttrValue};
use std::fmt::Write;

fn push_coord(out: &mut String, c: &Coord) {
    let _ = writeln!(out, "{} {}", c.x, c.y);
}

fn write_geometry(out: &mut String, geom: &Geometry) {
    match geom {
        Geometry::None => out.push_str("NONE\n"),
        Geometry::Point(c) => {
            let _ = writeln!(out, "POINT {} {}", c.x, c.y);
        }
        Geometry::MultiPoint(pts) => {
            let _ = writeln!(out, "MULTIPOINT {}", pts.len());
            pts.iter().for_each(|c| push_coord(out, c));
        }
        Geometry::PolyLine(parts) => match parts.as_slice() {
            [part] if part.len() == 2 => {
                let _ = writeln!(out, "LINE {} {} {} {}", part[0].x, part[0].y, part[1].x, part[1].y);
            }
            [part] => {
                let _ = writeln!(out, "PLINE {}", part.len());
                part.iter().for_each(|c| push_coord(out, c));
            }
            _ => {
                let _ = writeln!(out, "PLINE MULTIPLE {}", parts.len());
                for part in parts {
                    let _ = writeln!(out, "  {}", part.len());
                    part.iter().for_each(|c| push_coord(out, c));
                }
            }
        },
        Geometry::Region(region) => {
            let _ = writeln!(out, "REGION {}", region.rings().count());
            for ring in region.rings() {
                let _ = writeln!(out, "  {}", ring.coords().len());
                ring.coords().iter().for_each(|c| push_coord(out, c));
            }
        }
    }
}

fn write_cell(out: &mut String, value: &AttrValue) {
    match value {
        AttrValue::Text(s) => {
            out.push('"');
            out.push_str(&s.replace('"', "\"\""));
            out.push('"');
        }
        AttrValue::Int(v) => {
            let _ = write!(out, "{v}");
        }
        AttrValue::Real(v) => {
            let _ = write!(out, "{v}");
        }
        AttrValue::Bool(b) => out.push(if *b { 'T' } else { 'F' }),
        AttrValue::Date(d) => out.push_str(&format_date(d)),
        AttrValue::Null => {}
    }
}

/// Serializes a table as `(mif_text, mid_text)`, LF line endings, floats in
/// shortest exact form.
pub fn write_mif_mid(table: &FeatureTable) -> (String, String) {
    let h = &table.header;
    let mut mif = String::new();
    let _ = writeln!(mif, "VERSION {}", h.version);
    let _ = writeln!(mif, "CHARSET \"{}\"", h.charset);
    let _ = writeln!(mif, "DELIMITER \"{}\"", h.delimiter);
    if let Some(cs) = &h.coordsys {
        let _ = writeln!(mif, "{cs}");
    }
    let _ = writeln!(mif, "COLUMNS {}", h.columns.len());
    for col in &h.columns {
        let _ = writeln!(mif, "  {} {}", col.name, col.ctype);
    }
    mif.push_str("DATA\n");

    let mut mid = String::new();
    for feature in &table.features {
        write_geometry(&mut mif, &feature.geometry);
        for (i, value) in feature.attrs.iter().enumerate() {
            if i > 0 {
                mid.push(h.delimiter);
            }
            write_cell(&mut mid, value);
        }
        mid.push('\n');
    }
    (mif, mid)
}
