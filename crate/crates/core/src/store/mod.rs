//! Parcel store: a catalog of R-tree indexed layers persisted as a directory
//! of plain-text files, shared between many readers and one writer.

mod export;
mod layer;
mod persist;
pub mod rtree;

pub use export::{export_geojson, export_sql, feature_to_geojson, geometry_to_geojson};
pub use layer::{validate_layer_name, Layer, StoredFeature};
pub use persist::{load, save, CATALOG_FILE, LAYER_EXTENSION};
pub use rtree::RTree;

use crate::geometry::{Envelope, Geometry};
use crate::projection::{Crs, ProjectionError};
use crate::schema::{AttrValue, ColumnDef};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown layer {0:?}")]
    UnknownLayer(String),
    #[error("layer {0:?} already exists")]
    LayerExists(String),
    #[error("invalid layer name {0:?}")]
    InvalidLayerName(String),
    #[error("invalid feature id {0:?}")]
    InvalidId(String),
    #[error("duplicate feature id {0:?}")]
    DuplicateId(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt store file {} line {line}: {message}", file.display())]
    CorruptStore { file: PathBuf, line: usize, message: String },
    #[error("layer {0:?} has non-earth coordinates and cannot be exported as GeoJSON")]
    NonEarthExport(String),
    #[error("export: {0}")]
    Export(String),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
}

pub(crate) fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

/// Layers by name plus a version counter bumped on every mutation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    layers: BTreeMap<String, Arc<Layer>>,
    version: u64,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn from_parts(layers: Vec<Layer>, version: u64) -> Self {
        Catalog { layers: layers.into_iter().map(|l| (l.name().to_string(), Arc::new(l))).collect(), version }
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn layer_names(&self) -> impl Iterator<Item = &str> {
        self.layers.keys().map(String::as_str)
    }

    pub fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.layers.values().map(Arc::as_ref)
    }

    pub fn layer(&self, name: &str) -> Result<&Layer, StoreError> {
        self.layers.get(name).map(Arc::as_ref).ok_or_else(|| StoreError::UnknownLayer(name.to_string()))
    }

    fn layer_mut(&mut self, name: &str) -> Result<&mut Layer, StoreError> {
        self.layers.get_mut(name).map(Arc::make_mut).ok_or_else(|| StoreError::UnknownLayer(name.to_string()))
    }

    pub fn create_layer(&mut self, name: &str, crs: Crs, schema: Vec<ColumnDef>) -> Result<(), StoreError> {
        if self.layers.contains_key(name) {
            return Err(StoreError::LayerExists(name.to_string()));
        }
        let layer = Layer::new(name, crs, schema)?;
        self.layers.insert(name.to_string(), Arc::new(layer));
        self.version += 1;
        Ok(())
    }

    /// Adds or replaces a whole layer.
    pub fn insert_layer(&mut self, layer: Layer) -> Option<Arc<Layer>> {
        self.version += 1;
        self.layers.insert(layer.name().to_string(), Arc::new(layer))
    }

    pub fn drop_layer(&mut self, name: &str) -> bool {
        let removed = self.layers.remove(name).is_some();
        self.version += u64::from(removed);
        removed
    }

    pub fn put(
        &mut self,
        layer: &str,
        id: &str,
        geometry: Geometry,
        attrs: Vec<AttrValue>,
    ) -> Result<Option<StoredFeature>, StoreError> {
        let previous = self.layer_mut(layer)?.put(id, geometry, attrs)?;
        self.version += 1;
        Ok(previous)
    }

    pub fn get(&self, layer: &str, id: &str) -> Result<Option<&StoredFeature>, StoreError> {
        Ok(self.layer(layer)?.get(id))
    }

    pub fn delete(&mut self, layer: &str, id: &str) -> Result<bool, StoreError> {
        self.layer(layer)?;
        if self.layer(layer)?.get(id).is_none() {
            return Ok(false);
        }
        let removed = self.layer_mut(layer)?.delete(id);
        self.version += 1;
        Ok(removed)
    }

    pub fn bbox_query(&self, layer: &str, env: &Envelope) -> Result<Vec<String>, StoreError> {
        Ok(self.layer(layer)?.bbox_query(env).into_iter().map(str::to_string).collect())
    }

    pub fn approx_eq(&self, other: &Catalog, eps: f64) -> bool {
        self.version == other.version
            && self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|((na, a), (nb, b))| na == nb && a.approx_eq(b, eps))
    }
}

/// Shared catalog with snapshot reads and serialized commits.
///
/// Readers take an `Arc` to the current catalog and keep seeing that version
/// for as long as they hold it. A commit clones the current catalog (layers
/// are shared until touched), applies the change and publishes the result.
#[derive(Debug, Default)]
pub struct ParcelStore {
    current: RwLock<Arc<Catalog>>,
    writer: Mutex<()>,
    path: Option<PathBuf>,
}

impl ParcelStore {
    pub fn new(catalog: Catalog) -> Self {
        ParcelStore { current: RwLock::new(Arc::new(catalog)), writer: Mutex::new(()), path: None }
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref();
        let catalog = load(path)?;
        Ok(ParcelStore { path: Some(path.to_path_buf()), ..ParcelStore::new(catalog) })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn snapshot(&self) -> Arc<Catalog> {
        Arc::clone(&self.current.read().unwrap_or_else(|e| e.into_inner()))
    }

    /// Applies `f` to a private copy and publishes it if `f` succeeds.
    pub fn commit<R>(&self, f: impl FnOnce(&mut Catalog) -> Result<R, StoreError>) -> Result<R, StoreError> {
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let mut next = Catalog::clone(&self.snapshot());
        let out = f(&mut next)?;
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(next);
        Ok(out)
    }

    /// Writes the current snapshot to the store directory.
    pub fn persist(&self) -> Result<(), StoreError> {
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        match &self.path {
            Some(path) => save(&self.snapshot(), path),
            None => Ok(()),
        }
    }
}
