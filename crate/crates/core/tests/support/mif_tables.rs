//! Random MIF/MID tables and the fixture corpus loader.

use chrono::NaiveDate;
use parcel_forge::geometry::{Coord, Geometry, Polygon, Region, Ring};
use parcel_forge::mif::{parse_mif_mid, write_mif_mid, FeatureTable, MifHeader};
use parcel_forge::schema::{AttrValue, ColumnDef, ColumnType};
use proptest::prelude::*;
use std::fs;
use std::path::{Path, PathBuf};

/// Every `.mif` in `dir` with its `.mid` when present, in name order.
pub fn corpus(dir: &Path) -> Vec<(String, FeatureTable)> {
    let mut mifs: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "mif"))
        .collect();
    mifs.sort();
    mifs.into_iter()
        .map(|p| {
            let mif = fs::read_to_string(&p).unwrap();
            let mid = fs::read_to_string(p.with_extension("mid")).ok();
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            let table = parse_mif_mid(&mif, mid.as_deref()).unwrap_or_else(|e| panic!("{name}: {e}"));
            (name, table)
        })
        .collect()
}

/// Parse of the writer output; a MID is passed only when there is one.
pub fn round_trip(table: &FeatureTable) -> FeatureTable {
    let (mif, mid) = write_mif_mid(table);
    let mid = (!table.header.columns.is_empty() || !mid.is_empty()).then_some(mid);
    parse_mif_mid(&mif, mid.as_deref()).unwrap_or_else(|e| panic!("{e}\n{mif}"))
}

fn coord() -> impl Strategy<Value = Coord> {
    (-1e6..1e6f64, -1e6..1e6f64).prop_map(|(x, y)| Coord::new(x, y))
}

fn square(x: f64, y: f64, size: f64) -> Ring {
    Ring::new(vec![Coord::new(x, y), Coord::new(x + size, y), Coord::new(x + size, y + size), Coord::new(x, y + size)])
        .unwrap()
}

/// Disjoint grid squares, some with a centred hole.
fn region() -> impl Strategy<Value = Geometry> {
    (prop::collection::vec(any::<bool>(), 1..5), -1e5..1e5f64, -1e5..1e5f64, 1.0..500.0f64).prop_map(
        |(holes, x0, y0, size)| {
            let polys = holes
                .iter()
                .enumerate()
                .map(|(i, &hole)| {
                    let x = x0 + i as f64 * size * 2.0;
                    let inner = hole.then(|| square(x + size / 4.0, y0 + size / 4.0, size / 2.0)).into_iter().collect();
                    Polygon::new(square(x, y0, size), inner).unwrap()
                })
                .collect();
            Geometry::Region(Region::new(polys))
        },
    )
}

fn geometry() -> impl Strategy<Value = Geometry> {
    prop_oneof![
        Just(Geometry::None),
        coord().prop_map(Geometry::Point),
        prop::collection::vec(coord(), 1..6).prop_map(Geometry::MultiPoint),
        prop::collection::vec(prop::collection::vec(coord(), 2..6), 1..4).prop_map(Geometry::PolyLine),
        region(),
    ]
}

fn column_type() -> impl Strategy<Value = ColumnType> {
    prop_oneof![
        (1u16..40).prop_map(ColumnType::Char),
        Just(ColumnType::Integer),
        Just(ColumnType::SmallInt),
        Just(ColumnType::Float),
        (1u8..20).prop_flat_map(|w| (Just(w), 0..=w)).prop_map(|(width, precision)| ColumnType::Decimal { width, precision }),
        Just(ColumnType::Date),
        Just(ColumnType::Logical),
    ]
}

fn value(ctype: ColumnType) -> BoxedStrategy<AttrValue> {
    let v: BoxedStrategy<AttrValue> = match ctype {
        ColumnType::Char(n) => {
            proptest::string::string_regex(&format!("[a-zA-Z0-9 ,;\"'éàç/\t-]{{0,{n}}}")).unwrap().prop_map(AttrValue::Text).boxed()
        }
        ColumnType::Integer => any::<i32>().prop_map(|v| AttrValue::Int(v as i64)).boxed(),
        ColumnType::SmallInt => any::<i16>().prop_map(|v| AttrValue::Int(v as i64)).boxed(),
        ColumnType::Float | ColumnType::Decimal { .. } => {
            (-1e12..1e12f64).prop_map(AttrValue::Real).boxed()
        }
        ColumnType::Date => (0i32..80000).prop_map(|d| AttrValue::Date(NaiveDate::from_num_days_from_ce_opt(600000 + d).unwrap())).boxed(),
        ColumnType::Logical => any::<bool>().prop_map(AttrValue::Bool).boxed(),
    };
    prop_oneof![1 => Just(AttrValue::Null), 6 => v].boxed()
}

pub fn table() -> impl Strategy<Value = FeatureTable> {
    let delimiter = prop::sample::select(vec![',', ';', '\t', '|']);
    (prop::collection::vec(column_type(), 0..=8), delimiter, 0usize..=200).prop_flat_map(|(types, delimiter, n)| {
        let columns: Vec<ColumnDef> = types.iter().enumerate().map(|(i, t)| ColumnDef::new(format!("COL{i}"), *t)).collect();
        let row: Vec<BoxedStrategy<AttrValue>> = types.iter().map(|t| value(*t)).collect();
        prop::collection::vec((geometry(), row), n).prop_map(move |features| FeatureTable {
            header: MifHeader { delimiter, columns: columns.clone(), ..MifHeader::default() },
            features: features
                .into_iter()
                .map(|(geometry, attrs)| parcel_forge::mif::Feature { geometry, attrs })
                .collect(),
        })
    })
}
