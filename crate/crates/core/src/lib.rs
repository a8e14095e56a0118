//! Cadastral data migration toolkit.
//!
//! Reads legacy MapInfo MIF/MID exports and alphanumeric CSV tables,
//! normalizes land-title numbers, reprojects to Lambert conformal conic,
//! merges the sources into title-keyed parcels and stores them in a
//! spatially indexed, multi-reader parcel store.

pub mod geometry;
pub mod geoprocessing;
pub mod integration;
pub mod migration;
pub mod mif;
pub mod projection;
pub mod schema;
pub mod store;
pub mod title;

#[cfg(feature = "fixtures")]
pub mod fixtures;

pub use geometry::{from_wkt, to_wkt, Coord, Envelope, Geometry, GeometryError, Polygon, Region, Ring, EPS_COORD};
pub use geoprocessing::{select, spatial_join, AttributePredicate, CompareOp, GeoprocessingError, SpatialPredicate};
pub use integration::{merge_sources, Anomaly, AnomalyKind, MergePolicy};
pub use migration::{run_migration, validate, MigrationConfig, MigrationError, MigrationReport};
pub use projection::{reproject_geometry, Crs, LccParams, ProjectionError, ZoneRegistry};
pub use schema::{AttrValue, ColumnDef, ColumnType};
pub use store::{Catalog, Layer, ParcelStore, StoreError};
pub use title::{canonical_key, format_title, parse_title, same_title, TitleError, TitleFormat, TitleKey, TitleMatch};
