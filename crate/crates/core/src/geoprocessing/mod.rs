//! Vector analysis: buffer, boolean overlay of regions, spatial predicates,
//! spatial joins and selection.

mod buffer;
mod overlay;
mod predicates;
mod select;

pub use buffer::buffer;
pub use overlay::{intersect, union, union_all};
pub use predicates::{contains, intersects, SpatialPredicate};
pub use select::{select, spatial_join, AttributePredicate, CompareOp};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoprocessingError {
    #[error("buffer distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("segments per quadrant must be at least 1, got {0}")]
    InvalidSegments(u32),
    #[error("geometry is empty")]
    EmptyGeometry,
    #[error("layers are in different coordinate systems ({left} vs {right})")]
    CrsMismatch { left: String, right: String },
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("column {column:?} of type {ctype} cannot be compared with {value}")]
    TypeMismatch { column: String, ctype: String, value: String },
    #[error("selection needs an attribute or a spatial predicate")]
    NoPredicate,
}
