//! Directory layout: `catalog.json` plus one `<layer>.psl` per layer, each
//! line `id<TAB>WKT<TAB>attributes-as-compact-JSON`, in id order.

use super::{io_error, validate_layer_name, Catalog, Layer, StoreError};
use crate::geometry::{from_wkt, to_wkt, Geometry};
use crate::projection::Crs;
use crate::schema::{AttrValue, ColumnDef};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

pub const CATALOG_FILE: &str = "catalog.json";
pub const LAYER_EXTENSION: &str = "psl";
const FORMAT: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CatalogFile {
    format: u32,
    version: u64,
    layers: Vec<LayerEntry>,
}

#[derive(Serialize, Deserialize)]
struct LayerEntry {
    name: String,
    crs: Crs,
    schema: Vec<ColumnDef>,
    features: usize,
}

fn attrs_json(schema: &[ColumnDef], attrs: &[AttrValue]) -> String {
    let mut out = String::from("{");
    for (i, (col, v)) in schema.iter().zip(attrs).enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&serde_json::to_string(&col.name).expect("string serializes"));
        out.push(':');
        out.push_str(&v.to_json().to_string());
    }
    out.push('}');
    out
}

pub fn save(catalog: &Catalog, dir: &Path) -> Result<(), StoreError> {
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let file = CatalogFile {
        format: FORMAT,
        version: catalog.version(),
        layers: catalog
            .layers()
            .map(|l| LayerEntry {
                name: l.name().to_string(),
                crs: *l.crs(),
                schema: l.schema().to_vec(),
                features: l.len(),
            })
            .collect(),
    };
    for layer in catalog.layers() {
        let path = dir.join(format!("{}.{LAYER_EXTENSION}", layer.name()));
        let f = fs::File::create(&path).map_err(io_error(&path))?;
        let mut w = BufWriter::new(f);
        for (id, feature) in layer.iter() {
            let wkt = to_wkt(&feature.geometry).map_err(|e| StoreError::SchemaViolation(e.to_string()))?;
            writeln!(w, "{id}\t{wkt}\t{}", attrs_json(layer.schema(), &feature.attrs)).map_err(io_error(&path))?;
        }
        w.flush().map_err(io_error(&path))?;
    }
    // layer files left over from dropped layers
    for entry in fs::read_dir(dir).map_err(io_error(dir))? {
        let path = entry.map_err(io_error(dir))?.path();
        let stale = path.extension().is_some_and(|e| e == LAYER_EXTENSION)
            && path.file_stem().and_then(|s| s.to_str()).is_none_or(|s| catalog.layer(s).is_err());
        if stale {
            fs::remove_file(&path).map_err(io_error(&path))?;
        }
    }
    let path = dir.join(CATALOG_FILE);
    let mut text = serde_json::to_string_pretty(&file).expect("catalog serializes");
    text.push('\n');
    fs::write(&path, text).map_err(io_error(&path))
}

pub fn load(dir: &Path) -> Result<Catalog, StoreError> {
    let path = dir.join(CATALOG_FILE);
    let text = fs::read_to_string(&path).map_err(io_error(&path))?;
    let file: CatalogFile = serde_json::from_str(&text).map_err(|e| StoreError::CorruptStore {
        file: path.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    if file.format != FORMAT {
        return Err(StoreError::CorruptStore { file: path, line: 1, message: format!("unknown format {}", file.format) });
    }
    let mut layers = Vec::with_capacity(file.layers.len());
    for entry in file.layers {
        validate_layer_name(&entry.name)?;
        layers.push(load_layer(dir, entry)?);
    }
    Ok(Catalog::from_parts(layers, file.version))
}

fn load_layer(dir: &Path, entry: LayerEntry) -> Result<Layer, StoreError> {
    let path = dir.join(format!("{}.{LAYER_EXTENSION}", entry.name));
    let text = fs::read_to_string(&path).map_err(io_error(&path))?;
    let corrupt = |line: usize, message: String| StoreError::CorruptStore { file: path.clone(), line, message };
    if !text.is_empty() && !text.ends_with('\n') {
        return Err(corrupt(text.lines().count(), "last record is truncated".into()));
    }
    let mut features: Vec<(String, Geometry, Vec<AttrValue>)> = Vec::with_capacity(entry.features);
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let mut fields = line.splitn(3, '\t');
        let (Some(id), Some(wkt), Some(json)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(corrupt(n, "expected id, WKT and attributes separated by tabs".into()));
        };
        let geometry = from_wkt(wkt).map_err(|e| corrupt(n, e.to_string()))?;
        let object: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(json).map_err(|e| corrupt(n, e.to_string()))?;
        if object.len() != entry.schema.len() {
            return Err(corrupt(n, format!("{} attributes for {} columns", object.len(), entry.schema.len())));
        }
        let attrs = entry
            .schema
            .iter()
            .map(|col| {
                let v = object.get(&col.name).ok_or_else(|| corrupt(n, format!("missing attribute {}", col.name)))?;
                AttrValue::from_json(v, col.ctype)
                    .ok_or_else(|| corrupt(n, format!("attribute {} is not a valid {}", col.name, col.ctype)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        features.push((id.to_string(), geometry, attrs));
    }
    if features.len() != entry.features {
        return Err(corrupt(
            features.len() + 1,
            format!("expected {} features, found {}", entry.features, features.len()),
        ));
    }
    Layer::from_features(&entry.name, entry.crs, entry.schema, features).map_err(|e| corrupt(0, e.to_string()))
}
