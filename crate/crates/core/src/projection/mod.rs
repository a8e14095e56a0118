//! Coordinate reference handling: Lambert Conformal Conic (one standard
//! parallel) for reprojection, and least-squares affine fitting for raster
//! georeferencing.
//!
//! Geographic coordinates are the only pivot between systems; no datum shift
//! is ever applied.

mod affine;
mod lcc;
mod zones;

pub use affine::{apply_affine, fit_affine, AffineFit, AffineTransform, ControlPoint};
pub use lcc::{lcc_forward, lcc_inverse, LambertConic};
pub use zones::{ZoneRegistry, ZoneRegistryError};

use crate::geometry::{Coord, Geometry, GeometryError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error("coordinate (lon {lon}, lat {lat}) is outside the projection domain")]
    OutOfDomain { lon: f64, lat: f64 },
    #[error("inverse projection did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("invalid projection parameters: {0}")]
    InvalidParams(String),
    #[error("non-earth coordinates cannot be reprojected")]
    NonEarth,
    #[error("vertex {index}: {source}")]
    AtVertex {
        index: usize,
        #[source]
        source: Box<ProjectionError>,
    },
    #[error("at least 3 control points are required, got {0}")]
    TooFewPoints(usize),
    #[error("control points are collinear in pixel space")]
    DegenerateConfiguration,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub type Result<T, E = ProjectionError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    /// Semi-major axis in meters.
    pub a: f64,
    pub inv_f: f64,
}

impl Ellipsoid {
    pub const WGS84: Ellipsoid = Ellipsoid { a: 6_378_137.0, inv_f: 298.257_223_563 };

    pub fn flattening(&self) -> f64 {
        1.0 / self.inv_f
    }

    pub fn eccentricity_squared(&self) -> f64 {
        let f = self.flattening();
        f * (2.0 - f)
    }

    pub fn eccentricity(&self) -> f64 {
        self.eccentricity_squared().sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a > 0.0 && self.inv_f.is_finite() && self.inv_f > 1.0) {
            return Err(ProjectionError::InvalidParams(format!(
                "ellipsoid a={} inv_f={}",
                self.a, self.inv_f
            )));
        }
        Ok(())
    }
}

/// One-standard-parallel Lambert Conformal Conic parameters. Angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LccParams {
    pub ellipsoid: Ellipsoid,
    pub lat_0: f64,
    pub lon_0: f64,
    pub k_0: f64,
    pub false_easting: f64,
    pub false_northing: f64,
}

impl LccParams {
    pub fn validate(&self) -> Result<()> {
        self.ellipsoid.validate()?;
        let ok = self.lat_0.is_finite()
            && self.lat_0.abs() < 90.0
            && self.lat_0 != 0.0
            && self.lon_0.is_finite()
            && self.lon_0.abs() <= 180.0
            && self.k_0.is_finite()
            && self.k_0 > 0.0
            && self.false_easting.is_finite()
            && self.false_northing.is_finite();
        if ok {
            Ok(())
        } else {
            Err(ProjectionError::InvalidParams(format!("{self:?}")))
        }
    }
}

/// A coordinate reference system as far as this toolkit is concerned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Crs {
    Geographic,
    Lcc(LccParams),
    NonEarth,
}

impl Crs {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Crs::Geographic => "geographic",
            Crs::Lcc(_) => "lcc",
            Crs::NonEarth => "non_earth",
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Crs::Geographic => "geographic longitude/latitude in decimal degrees".to_string(),
            Crs::Lcc(p) => format!(
                "Lambert Conformal Conic (1SP) lat_0={} lon_0={} k_0={} x_0={} y_0={} a={} 1/f={}, meters",
                p.lat_0, p.lon_0, p.k_0, p.false_easting, p.false_northing, p.ellipsoid.a, p.ellipsoid.inv_f
            ),
            Crs::NonEarth => "non-earth planar coordinates".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoCoord {
    pub lon: f64,
    pub lat: f64,
}

impl GeoCoord {
    pub const fn new(lon: f64, lat: f64) -> Self {
        Self { lon, lat }
    }

    pub fn is_valid(&self) -> bool {
        self.lon.is_finite() && self.lat.is_finite() && self.lat.abs() <= 90.0 && self.lon.abs() <= 180.0
    }
}

enum Stage {
    Geographic,
    Lcc(LambertConic),
}

impl Stage {
    fn new(crs: &Crs) -> Result<Stage> {
        match crs {
            Crs::Geographic => Ok(Stage::Geographic),
            Crs::Lcc(p) => Ok(Stage::Lcc(LambertConic::new(p)?)),
            Crs::NonEarth => Err(ProjectionError::NonEarth),
        }
    }

    fn to_geo(&self, c: Coord) -> Result<GeoCoord> {
        match self {
            Stage::Lcc(l) => l.inverse(c),
            Stage::Geographic => {
                let g = GeoCoord::new(c.x, c.y);
                if g.is_valid() {
                    Ok(g)
                } else {
                    Err(ProjectionError::OutOfDomain { lon: c.x, lat: c.y })
                }
            }
        }
    }

    fn from_geo(&self, g: GeoCoord) -> Result<Coord> {
        match self {
            Stage::Lcc(l) => l.forward(g),
            Stage::Geographic => Ok(Coord::new(g.lon, g.lat)),
        }
    }
}

/// Maps every coordinate of `geom` from `from` into `to` through geographic
/// coordinates. Structure is preserved and ring orientation re-normalized.
pub fn reproject_geometry(geom: &Geometry, from: &Crs, to: &Crs) -> Result<Geometry> {
    if from == to {
        return Ok(geom.clone());
    }
    let (src, dst) = match (from, to) {
        (Crs::NonEarth, _) | (_, Crs::NonEarth) => return Err(ProjectionError::NonEarth),
        _ => (Stage::new(from)?, Stage::new(to)?),
    };
    geom.try_map_coords(|index, c| {
        src.to_geo(c)
            .and_then(|g| dst.from_geo(g))
            .map_err(|e| ProjectionError::AtVertex { index, source: Box::new(e) })
    })
}
