use super::rtree::RTree;
use super::StoreError;
use crate::geometry::{Envelope, Geometry};
use crate::projection::Crs;
use crate::schema::{is_identifier, validate_columns, AttrValue, ColumnDef};
use crate::title::{parse_canonical_key, same_title, TitleKey, TitleMatch};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq)]
pub struct StoredFeature {
    pub geometry: Geometry,
    pub attrs: Vec<AttrValue>,
}

/// Named feature collection in one CRS, indexed by envelope and by title.
#[derive(Debug, Clone)]
pub struct Layer {
    name: String,
    crs: Crs,
    schema: Vec<ColumnDef>,
    features: BTreeMap<String, StoredFeature>,
    index: RTree<String>,
    /// title core key -> ids stored under a canonical title key
    titles: BTreeMap<String, BTreeSet<String>>,
}

impl PartialEq for Layer {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.crs == other.crs && self.schema == other.schema && self.features == other.features
    }
}

pub fn validate_layer_name(name: &str) -> Result<(), StoreError> {
    if is_identifier(name) {
        Ok(())
    } else {
        Err(StoreError::InvalidLayerName(name.to_string()))
    }
}

fn validate_id(id: &str) -> Result<(), StoreError> {
    if id.is_empty() || id.chars().any(char::is_control) {
        return Err(StoreError::InvalidId(id.to_string()));
    }
    Ok(())
}

impl Layer {
    pub fn new(name: &str, crs: Crs, schema: Vec<ColumnDef>) -> Result<Self, StoreError> {
        validate_layer_name(name)?;
        validate_columns(&schema).map_err(StoreError::SchemaViolation)?;
        Ok(Layer {
            name: name.to_string(),
            crs,
            schema,
            features: BTreeMap::new(),
            index: RTree::new(),
            titles: BTreeMap::new(),
        })
    }

    /// Builds a populated layer with a bulk-loaded index.
    pub fn from_features(
        name: &str,
        crs: Crs,
        schema: Vec<ColumnDef>,
        features: impl IntoIterator<Item = (String, Geometry, Vec<AttrValue>)>,
    ) -> Result<Self, StoreError> {
        let mut layer = Layer::new(name, crs, schema)?;
        let mut entries = Vec::new();
        for (id, geometry, attrs) in features {
            let env = layer.check(&id, &geometry, &attrs)?;
            if layer.features.contains_key(&id) {
                return Err(StoreError::DuplicateId(id));
            }
            layer.index_title(&id);
            entries.push((env, id.clone()));
            layer.features.insert(id, StoredFeature { geometry, attrs });
        }
        layer.index = RTree::bulk_load(entries);
        Ok(layer)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn crs(&self) -> &Crs {
        &self.crs
    }

    pub fn schema(&self) -> &[ColumnDef] {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|c| c.name.eq_ignore_ascii_case(name))
    }

    /// Features in id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &StoredFeature)> {
        self.features.iter().map(|(id, f)| (id.as_str(), f))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.features.keys().map(String::as_str)
    }

    fn check(&self, id: &str, geometry: &Geometry, attrs: &[AttrValue]) -> Result<Envelope, StoreError> {
        validate_id(id)?;
        let env = geometry
            .envelope()
            .map_err(|_| StoreError::SchemaViolation(format!("feature {id:?} has no geometry")))?;
        if attrs.len() != self.schema.len() {
            return Err(StoreError::SchemaViolation(format!(
                "feature {id:?} has {} attributes, layer {} has {} columns",
                attrs.len(),
                self.name,
                self.schema.len()
            )));
        }
        if let Some((col, v)) = self.schema.iter().zip(attrs).find(|(c, v)| !c.ctype.accepts(v)) {
            return Err(StoreError::SchemaViolation(format!(
                "feature {id:?}: {v:?} does not fit column {} ({})",
                col.name, col.ctype
            )));
        }
        Ok(env)
    }

    fn index_title(&mut self, id: &str) {
        if let Some(key) = parse_canonical_key(id) {
            self.titles.entry(key.core_key()).or_default().insert(id.to_string());
        }
    }

    fn unindex_title(&mut self, id: &str) {
        if let Some(key) = parse_canonical_key(id) {
            let core = key.core_key();
            if let Some(ids) = self.titles.get_mut(&core) {
                ids.remove(id);
                if ids.is_empty() {
                    self.titles.remove(&core);
                }
            }
        }
    }

    pub fn put(&mut self, id: &str, geometry: Geometry, attrs: Vec<AttrValue>) -> Result<Option<StoredFeature>, StoreError> {
        let env = self.check(id, &geometry, &attrs)?;
        let previous = self.remove(id);
        self.index.insert(env, id.to_string());
        self.index_title(id);
        self.features.insert(id.to_string(), StoredFeature { geometry, attrs });
        Ok(previous)
    }

    pub fn get(&self, id: &str) -> Option<&StoredFeature> {
        self.features.get(id)
    }

    pub fn remove(&mut self, id: &str) -> Option<StoredFeature> {
        let old = self.features.remove(id)?;
        let env = old.geometry.envelope().expect("stored geometry has an envelope");
        let removed = self.index.remove(&env, &id.to_string());
        debug_assert!(removed, "index out of sync for {id}");
        self.unindex_title(id);
        Some(old)
    }

    pub fn delete(&mut self, id: &str) -> bool {
        self.remove(id).is_some()
    }

    /// Ids whose feature envelope intersects `env`, boundaries included, in id order.
    pub fn bbox_query(&self, env: &Envelope) -> Vec<&str> {
        let mut ids: Vec<&str> = self.index.query(env).into_iter().map(String::as_str).collect();
        ids.sort_unstable();
        ids
    }

    /// Ids stored under a title equivalent to `key`, in id order.
    pub fn find_title(&self, key: &TitleKey) -> Vec<&str> {
        let Some(ids) = self.titles.get(&key.core_key()) else {
            return Vec::new();
        };
        ids.iter()
            .filter(|id| parse_canonical_key(id).is_some_and(|k| same_title(&k, key) == TitleMatch::Same))
            .map(String::as_str)
            .collect()
    }

    /// Index structure plus exact agreement between the index and the features.
    pub fn check_index(&self) -> Result<(), String> {
        self.index.check_invariants()?;
        let mut indexed: Vec<(&Envelope, &String)> = self.index.iter().collect();
        indexed.sort_by(|a, b| a.1.cmp(b.1));
        if indexed.len() != self.features.len() {
            return Err(format!("{} index entries for {} features", indexed.len(), self.features.len()));
        }
        for ((env, id), (fid, f)) in indexed.into_iter().zip(&self.features) {
            if id != fid || f.geometry.envelope().ok().as_ref() != Some(env) {
                return Err(format!("index entry {id} does not match feature {fid}"));
            }
        }
        Ok(())
    }

    /// Equality with geometry compared within `eps`.
    pub fn approx_eq(&self, other: &Layer, eps: f64) -> bool {
        self.name == other.name
            && self.crs == other.crs
            && self.schema == other.schema
            && self.features.len() == other.features.len()
            && self.features.iter().zip(&other.features).all(|((ia, a), (ib, b))| {
                ia == ib && a.attrs == b.attrs && a.geometry.approx_eq(&b.geometry, eps)
            })
    }
}
