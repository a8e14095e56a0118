//! Shipped projection parameter sets. The values live in
//! `data/lcc_zones.json` and are configuration, not code.

use super::{Ellipsoid, LccParams};
use serde::Deserialize;
use std::collections::BTreeMap;
use thiserror::Error;

const BUILTIN: &str = include_str!("../../data/lcc_zones.json");

#[derive(Debug, Error)]
pub enum ZoneRegistryError {
    #[error("invalid zone registry: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("zone {zone} references unknown ellipsoid {ellipsoid}")]
    UnknownEllipsoid { zone: String, ellipsoid: String },
}

#[derive(Debug, Deserialize)]
struct RawZone {
    ellipsoid: String,
    lat_0: f64,
    lon_0: f64,
    k_0: f64,
    false_easting: f64,
    false_northing: f64,
}

#[derive(Debug, Deserialize)]
struct RawRegistry {
    ellipsoids: BTreeMap<String, Ellipsoid>,
    #[serde(default)]
    mapinfo_datums: BTreeMap<String, String>,
    zones: BTreeMap<String, RawZone>,
    default_zone: String,
}

#[derive(Debug, Clone)]
pub struct ZoneRegistry {
    ellipsoids: BTreeMap<String, Ellipsoid>,
    datums: BTreeMap<u32, Ellipsoid>,
    zones: BTreeMap<String, LccParams>,
    default_zone: String,
}

impl ZoneRegistry {
    pub fn from_json(text: &str) -> Result<Self, ZoneRegistryError> {
        let raw: RawRegistry = serde_json::from_str(text)?;
        let lookup = |zone: &str, name: &str| {
            raw.ellipsoids.get(name).copied().ok_or_else(|| ZoneRegistryError::UnknownEllipsoid {
                zone: zone.to_string(),
                ellipsoid: name.to_string(),
            })
        };
        let mut zones = BTreeMap::new();
        for (name, z) in &raw.zones {
            zones.insert(
                name.clone(),
                LccParams {
                    ellipsoid: lookup(name, &z.ellipsoid)?,
                    lat_0: z.lat_0,
                    lon_0: z.lon_0,
                    k_0: z.k_0,
                    false_easting: z.false_easting,
                    false_northing: z.false_northing,
                },
            );
        }
        let mut datums = BTreeMap::new();
        for (num, ell) in &raw.mapinfo_datums {
            if let Ok(n) = num.parse::<u32>() {
                datums.insert(n, lookup(&format!("datum {num}"), ell)?);
            }
        }
        Ok(Self { ellipsoids: raw.ellipsoids, datums, zones, default_zone: raw.default_zone })
    }

    pub fn builtin() -> Self {
        Self::from_json(BUILTIN).expect("shipped zone registry is valid")
    }

    pub fn zone(&self, name: &str) -> Option<LccParams> {
        self.zones.get(name).copied()
    }

    pub fn zone_names(&self) -> impl Iterator<Item = &str> {
        self.zones.keys().map(String::as_str)
    }

    pub fn default_zone(&self) -> LccParams {
        self.zones[&self.default_zone]
    }

    pub fn ellipsoid(&self, name: &str) -> Option<Ellipsoid> {
        self.ellipsoids.get(name).copied()
    }

    /// Ellipsoid for a MapInfo datum number, when the registry knows it.
    pub fn mapinfo_datum(&self, datum: u32) -> Option<Ellipsoid> {
        self.datums.get(&datum).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_zones_validate() {
        let reg = ZoneRegistry::builtin();
        assert!(reg.zone_names().count() >= 1);
        for name in reg.zone_names() {
            reg.zone(name).unwrap().validate().unwrap();
        }
        assert_eq!(reg.mapinfo_datum(104), Some(Ellipsoid::WGS84));
    }

    #[test]
    fn unknown_ellipsoid_is_reported() {
        let text = r#"{"ellipsoids":{},"zones":{"z":{"ellipsoid":"x","lat_0":1,"lon_0":0,"k_0":1,"false_easting":0,"false_northing":0}},"default_zone":"z"}"#;
        assert!(matches!(ZoneRegistry::from_json(text), Err(ZoneRegistryError::UnknownEllipsoid { .. })));
    }
}
