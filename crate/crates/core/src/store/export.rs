use super::{Layer, StoreError, StoredFeature};
use crate::geometry::{to_wkt, Coord, Geometry, Polygon};
use crate::projection::{reproject_geometry, Crs};
use crate::schema::{AttrValue, ColumnType};
use serde_json::{json, Map, Value};
use std::fmt::Write;

fn sql_type(t: ColumnType) -> String {
    match t {
        ColumnType::Char(n) => format!("VARCHAR({n})"),
        ColumnType::Integer => "INTEGER".into(),
        ColumnType::SmallInt => "SMALLINT".into(),
        ColumnType::Float => "DOUBLE PRECISION".into(),
        ColumnType::Decimal { width, precision } => format!("NUMERIC({width},{precision})"),
        ColumnType::Date => "DATE".into(),
        ColumnType::Logical => "BOOLEAN".into(),
    }
}

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn sql_literal(v: &AttrValue) -> String {
    match v {
        AttrValue::Null => "NULL".into(),
        AttrValue::Text(s) => quote(s),
        AttrValue::Int(i) => i.to_string(),
        AttrValue::Real(r) => format!("{r:?}"),
        AttrValue::Bool(b) => if *b { "TRUE" } else { "FALSE" }.into(),
        AttrValue::Date(d) => quote(&d.format("%Y-%m-%d").to_string()),
    }
}

/// SQL script creating a table named after the layer, with a `feature_id`
/// key column, one column per schema entry and a `geom` column.
pub fn export_sql(layer: &Layer, srid: i32) -> Result<String, StoreError> {
    for reserved in ["feature_id", "geom"] {
        if layer.column_index(reserved).is_some() {
            return Err(StoreError::Export(format!("column name {reserved:?} is reserved in SQL export")));
        }
    }
    let mut out = String::new();
    let mut cols = vec!["feature_id VARCHAR(64) PRIMARY KEY".to_string()];
    cols.extend(layer.schema().iter().map(|c| format!("{} {}", c.name, sql_type(c.ctype))));
    cols.push("geom GEOMETRY".to_string());
    let _ = writeln!(out, "CREATE TABLE {} (\n    {}\n);", layer.name(), cols.join(",\n    "));
    let names: Vec<&str> = std::iter::once("feature_id")
        .chain(layer.schema().iter().map(|c| c.name.as_str()))
        .chain(std::iter::once("geom"))
        .collect();
    for (id, f) in layer.iter() {
        let wkt = to_wkt(&f.geometry).map_err(|e| StoreError::Export(e.to_string()))?;
        let mut values = vec![quote(id)];
        values.extend(f.attrs.iter().map(sql_literal));
        values.push(format!("ST_GeomFromText({}, {srid})", quote(&wkt)));
        let _ = writeln!(out, "INSERT INTO {} ({}) VALUES ({});", layer.name(), names.join(", "), values.join(", "));
    }
    Ok(out)
}

fn position(c: &Coord) -> Value {
    json!([c.x, c.y])
}

fn polygon_rings(p: &Polygon) -> Value {
    Value::Array(p.rings().map(|r| Value::Array(r.coords().iter().map(position).collect())).collect())
}

/// GeoJSON geometry object with coordinates as given. `Geometry::None` maps to `null`.
pub fn geometry_to_geojson(g: &Geometry) -> Value {
    match g {
        Geometry::Point(c) => json!({"type": "Point", "coordinates": position(c)}),
        Geometry::MultiPoint(cs) => {
            json!({"type": "MultiPoint", "coordinates": cs.iter().map(position).collect::<Vec<_>>()})
        }
        Geometry::PolyLine(parts) if parts.len() == 1 => {
            json!({"type": "LineString", "coordinates": parts[0].iter().map(position).collect::<Vec<_>>()})
        }
        Geometry::PolyLine(parts) => json!({
            "type": "MultiLineString",
            "coordinates": parts.iter().map(|p| p.iter().map(position).collect::<Vec<_>>()).collect::<Vec<_>>(),
        }),
        Geometry::Region(r) if r.polygons().len() == 1 => {
            json!({"type": "Polygon", "coordinates": polygon_rings(&r.polygons()[0])})
        }
        Geometry::Region(r) => json!({
            "type": "MultiPolygon",
            "coordinates": r.polygons().iter().map(polygon_rings).collect::<Vec<_>>(),
        }),
        Geometry::None => Value::Null,
    }
}

pub fn feature_to_geojson(layer: &Layer, id: &str, feature: &StoredFeature) -> Value {
    feature_json(layer, id, &feature.attrs, geometry_to_geojson(&feature.geometry))
}

fn feature_json(layer: &Layer, id: &str, attrs: &[AttrValue], geometry: Value) -> Value {
    let properties: Map<String, Value> =
        layer.schema().iter().zip(attrs).map(|(c, v)| (c.name.clone(), v.to_json())).collect();
    json!({"type": "Feature", "id": id, "geometry": geometry, "properties": properties})
}

/// FeatureCollection in geographic coordinates; projected layers are
/// converted on the way out.
pub fn export_geojson(layer: &Layer) -> Result<String, StoreError> {
    if *layer.crs() == Crs::NonEarth {
        return Err(StoreError::NonEarthExport(layer.name().to_string()));
    }
    let features = layer
        .iter()
        .map(|(id, f)| {
            let g = reproject_geometry(&f.geometry, layer.crs(), &Crs::Geographic)?;
            Ok(feature_json(layer, id, &f.attrs, geometry_to_geojson(&g)))
        })
        .collect::<Result<Vec<_>, StoreError>>()?;
    let mut text = serde_json::to_string(&json!({"type": "FeatureCollection", "features": features}))
        .expect("geojson serializes");
    text.push('\n');
    Ok(text)
}
