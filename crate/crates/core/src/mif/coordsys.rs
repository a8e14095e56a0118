use super::MifError;
use crate::projection::{Crs, LccParams, ZoneRegistry};

/// Interprets a `CoordSys` clause using the built-in datum table.
pub fn coordsys_to_projection(clause: &str) -> Result<Crs, MifError> {
    coordsys_to_projection_with(clause, &ZoneRegistry::builtin())
}

/// As [`coordsys_to_projection`], resolving MapInfo datum numbers through `registry`.
pub fn coordsys_to_projection_with(clause: &str, registry: &ZoneRegistry) -> Result<Crs, MifError> {
    let unsupported = || MifError::UnsupportedCoordSys(clause.trim().to_string());
    // drop any trailing Bounds (...) clause
    let body = clause.trim();
    let body = match body.to_ascii_lowercase().find("bounds") {
        Some(i) => &body[..i],
        None => body,
    };
    let mut words = body.split_whitespace();
    if !words.next().is_some_and(|w| w.eq_ignore_ascii_case("coordsys")) {
        return Err(unsupported());
    }
    match words.next().map(str::to_ascii_lowercase).as_deref() {
        Some("nonearth") => return Ok(Crs::NonEarth),
        Some("earth") => {}
        _ => return Err(unsupported()),
    }
    if !words.next().is_some_and(|w| w.eq_ignore_ascii_case("projection")) {
        return Err(unsupported());
    }
    let rest: Vec<&str> = words.collect();
    let params: Vec<String> = rest.join(" ").split(',').map(|p| p.trim().to_string()).collect();
    let number = |i: usize| -> Result<f64, MifError> {
        params.get(i).and_then(|p| p.parse::<f64>().ok()).filter(|v| v.is_finite()).ok_or_else(unsupported)
    };

    match params.first().map(String::as_str) {
        Some("1") => Ok(Crs::Geographic),
        Some("3") => {
            if params.len() < 9 {
                return Err(unsupported());
            }
            let datum = params[1].parse::<u32>().map_err(|_| unsupported())?;
            let ellipsoid = registry.mapinfo_datum(datum).ok_or_else(unsupported)?;
            if !matches!(params[2].trim_matches('"'), "m" | "7") {
                return Err(unsupported());
            }
            let lcc = LccParams::from_two_parallels(
                ellipsoid,
                number(4)?,
                number(3)?,
                number(5)?,
                number(6)?,
                number(7)?,
                number(8)?,
            )
            .map_err(|_| unsupported())?;
            Ok(Crs::Lcc(lcc))
        }
        _ => Err(unsupported()),
    }
}
