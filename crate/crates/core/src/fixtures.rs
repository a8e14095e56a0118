//! Seeded synthetic data: a two-source migration corpus with planted
//! anomalies and known ground truth, plus random layers for store tests.

use crate::geometry::{Coord, Geometry, Polygon, Region, Ring};
use crate::integration::AnomalyKind;
use crate::mif::{coordsys_to_projection, write_mif_mid, Feature, FeatureTable, MifHeader};
use crate::projection::{reproject_geometry, Crs, ZoneRegistry};
use crate::schema::{AttrValue, ColumnDef, ColumnType};
use crate::store::Layer;
use crate::title::{format_title, TitleFormat, TitleKey};
use crate::migration::{AlphaInput, ColumnRef, GraphicInput, MigrationConfig, TargetCrs};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::io;
use std::path::Path;

pub const PROJECTED_COORDSYS: &str = "CoordSys Earth Projection 3, 104, \"m\", -5.4, 33.3, 31.73, 34.87, 500000, 300000";

/// Counts the generator planted, to compare with a migration report.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FixtureTruth {
    pub graphics: usize,
    pub alphas: usize,
    pub titles_by_format: BTreeMap<TitleFormat, usize>,
    pub anomalies: BTreeMap<AnomalyKind, usize>,
    pub parcels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixtureSpec {
    pub f1: usize,
    pub f2: usize,
    pub f3: usize,
    pub alphas: usize,
    pub orphan_geometry: usize,
    pub orphan_attributes: usize,
    pub duplicate_geometry: usize,
    pub duplicate_attributes: usize,
    pub conservation_conflict: usize,
    pub alpha_parse_failures: usize,
    pub area_mismatch: usize,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            f1: 400,
            f2: 350,
            f3: 250,
            alphas: 950,
            orphan_geometry: 60,
            orphan_attributes: 10,
            duplicate_geometry: 5,
            duplicate_attributes: 3,
            conservation_conflict: 3,
            alpha_parse_failures: 2,
            area_mismatch: 4,
        }
    }
}

impl FixtureSpec {
    pub fn graphics(&self) -> usize {
        self.f1 + self.f2 + self.f3
    }

    /// Parcels the merge should produce; the alpha count is implied by the rest.
    pub fn parcels(&self) -> usize {
        self.graphics() - self.orphan_geometry - self.duplicate_geometry
    }

    fn implied_alphas(&self) -> usize {
        self.parcels() + self.duplicate_attributes + self.orphan_attributes + self.alpha_parse_failures
    }
}

struct Graphic {
    key: TitleKey,
    format: TitleFormat,
    geometry: Geometry,
}

struct Alpha {
    raw_title: String,
    owner: String,
    surface: Option<f64>,
    commune: String,
}

fn key(rng: &mut ChaCha8Rng, number: usize, conservation: bool) -> TitleKey {
    let nature = ['T', 'R', 'D'][rng.gen_range(0..3)];
    let index = rng.gen_range(1..100).to_string();
    let code = format!("{:02}", rng.gen_range(1..60));
    TitleKey::new(conservation.then_some(code.as_str()), nature, &number.to_string(), &index).expect("valid key")
}

/// Quadrilateral parcel in lon/lat near the northern zone, one per grid cell.
fn parcel(rng: &mut ChaCha8Rng, cell: usize) -> Geometry {
    let (col, row) = ((cell % 40) as f64, (cell / 40) as f64);
    let (x0, y0) = (-5.9 + col * 0.004, 33.1 + row * 0.004);
    let mut j = || rng.gen_range(0.0..0.0008);
    let outer = vec![
        Coord::new(x0 + j(), y0 + j()),
        Coord::new(x0 + 0.003 - j(), y0 + j()),
        Coord::new(x0 + 0.003 - j(), y0 + 0.003 - j()),
        Coord::new(x0 + j(), y0 + 0.003 - j()),
    ];
    let outer = Ring::new(outer).expect("valid ring");
    let holes = if cell % 37 == 5 {
        let c = (x0 + 0.0015, y0 + 0.0015);
        vec![Ring::new(vec![
            Coord::new(c.0 - 0.0003, c.1 - 0.0003),
            Coord::new(c.0 + 0.0003, c.1 - 0.0003),
            Coord::new(c.0 + 0.0003, c.1 + 0.0003),
            Coord::new(c.0 - 0.0003, c.1 + 0.0003),
        ])
        .expect("valid ring")]
    } else {
        Vec::new()
    };
    Geometry::Region(Region::from(Polygon::new(outer, holes).expect("valid polygon")))
}

fn owner(rng: &mut ChaCha8Rng) -> String {
    const NAMES: [&str; 8] = ["Alaoui", "Bennani", "El Idrissi", "Tazi", "O'Neil", "Berrada", "Fassi, M.", "Chraibi"];
    NAMES[rng.gen_range(0..NAMES.len())].to_string()
}

/// Writes `graphics_geo.mif/.mid` (geographic), `graphics_lcc.mif/.mid`
/// (MapInfo projection 3), `alpha_1.csv`, `alpha_2.csv` and `config.json`
/// into `dir`, and returns the planted counts.
pub fn write_migration_fixture(dir: &Path, seed: u64, spec: &FixtureSpec) -> io::Result<FixtureTruth> {
    assert_eq!(spec.alphas, spec.implied_alphas(), "alpha count must equal matched + planted alpha rows");
    assert!(spec.conservation_conflict <= spec.f3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = Crs::Lcc(ZoneRegistry::builtin().zone("nord_maroc").expect("shipped zone"));

    let mut formats: Vec<TitleFormat> = std::iter::repeat_n(TitleFormat::F1, spec.f1)
        .chain(std::iter::repeat_n(TitleFormat::F2, spec.f2))
        .chain(std::iter::repeat_n(TitleFormat::F3, spec.f3))
        .collect();
    formats.shuffle(&mut rng);
    let mut numbers: Vec<usize> = (1..=spec.graphics() + spec.orphan_attributes).map(|n| n * 7 + 1000).collect();
    numbers.shuffle(&mut rng);

    // graphics in bucket order: duplicate pairs first, then single members
    let mut graphics = Vec::with_capacity(spec.graphics());
    let mut next_number = numbers.into_iter();
    let mut i = 0;
    while i < formats.len() {
        let dup = graphics.len() < 2 * spec.duplicate_geometry;
        let k = key(&mut rng, next_number.next().expect("enough numbers"), true);
        let members = if dup { 2 } else { 1 };
        for _ in 0..members {
            let format = formats[i];
            let member_key = if format == TitleFormat::F3 { k.clone() } else { k.with_conservation(None) };
            graphics.push(Graphic { key: member_key, format, geometry: parcel(&mut rng, i) });
            i += 1;
        }
    }

    // one representative graphic per bucket; duplicate pairs occupy the first slots
    let dup_heads: Vec<usize> = (0..spec.duplicate_geometry).map(|d| 2 * d).collect();
    let singles: Vec<usize> = (2 * spec.duplicate_geometry..graphics.len()).collect();
    let (_orphans, single_matched) = singles.split_at(spec.orphan_geometry);
    let matched: Vec<usize> = dup_heads.iter().chain(single_matched).copied().collect();
    debug_assert_eq!(matched.len(), spec.parcels());

    let conflict: Vec<usize> = single_matched
        .iter()
        .copied()
        .filter(|&g| graphics[g].format == TitleFormat::F3)
        .take(spec.conservation_conflict)
        .collect();
    let mismatch: Vec<usize> =
        single_matched.iter().rev().copied().filter(|g| !conflict.contains(g)).take(spec.area_mismatch).collect();
    let dup_alpha: Vec<usize> =
        single_matched[single_matched.len() / 2..].iter().copied().take(spec.duplicate_attributes).collect();

    let area = |g: &Graphic| reproject_geometry(&g.geometry, &Crs::Geographic, &target).expect("in zone").area();
    let mut alphas = Vec::with_capacity(spec.alphas);
    for &g in &matched {
        let gr = &graphics[g];
        let mut k = gr.key.clone();
        if conflict.contains(&g) {
            let code = gr.key.conservation().map_or(1, |c| c.parse::<u32>().expect("digits") % 59 + 1);
            k = k.with_conservation(Some(&format!("{:02}", code + 60)));
        } else if gr.key.conservation().is_none() && rng.gen_bool(0.5) {
            k = k.with_conservation(Some(&format!("{:02}", rng.gen_range(1..60))));
        }
        let format = if k.conservation().is_some() { TitleFormat::F3 } else { TitleFormat::ALL[rng.gen_range(0..2)] };
        // either member of a duplicate pair may win, so those rows declare no area
        let surface = (!dup_heads.contains(&g))
            .then(|| (area(gr) * if mismatch.contains(&g) { 1.3 } else { 1.0 } * 100.0).round() / 100.0);
        let raw_title = format_title(&k, format).expect("formattable");
        let copies = if dup_alpha.contains(&g) { 2 } else { 1 };
        for _ in 0..copies {
            alphas.push(Alpha { raw_title: raw_title.clone(), owner: owner(&mut rng), surface, commune: "Rabat".into() });
        }
    }
    for n in next_number.take(spec.orphan_attributes) {
        let k = key(&mut rng, n, false);
        let raw_title = format_title(&k, TitleFormat::F2).expect("formattable");
        alphas.push(Alpha { raw_title, owner: owner(&mut rng), surface: None, commune: "Sale".into() });
    }
    for f in 0..spec.alpha_parse_failures {
        let raw_title = if f % 2 == 0 { "XYZ".to_string() } else { "T//20".to_string() };
        alphas.push(Alpha { raw_title, owner: owner(&mut rng), surface: Some(1.0), commune: "Temara".into() });
    }

    let mut order: Vec<usize> = (0..graphics.len()).collect();
    order.shuffle(&mut rng);
    let half = order.len() / 2;
    let lcc_crs = coordsys_to_projection(PROJECTED_COORDSYS).expect("fixture clause is supported");
    for (name, ids, coordsys) in [
        ("graphics_geo", &order[..half], None),
        ("graphics_lcc", &order[half..], Some(PROJECTED_COORDSYS)),
    ] {
        let header = MifHeader {
            coordsys: coordsys.map(str::to_string),
            columns: vec![ColumnDef::new("ID", ColumnType::Integer), ColumnDef::new("TITRE", ColumnType::Char(24))],
            ..MifHeader::default()
        };
        let features = ids
            .iter()
            .map(|&g| {
                let gr = &graphics[g];
                let geometry = match coordsys {
                    Some(_) => reproject_geometry(&gr.geometry, &Crs::Geographic, &lcc_crs).expect("in zone"),
                    None => gr.geometry.clone(),
                };
                let title = format_title(&gr.key, gr.format).expect("formattable");
                Feature { geometry, attrs: vec![AttrValue::Int(g as i64 + 1), AttrValue::Text(title)] }
            })
            .collect();
        let (mif, mid) = write_mif_mid(&FeatureTable { header, features });
        std::fs::write(dir.join(format!("{name}.mif")), mif)?;
        std::fs::write(dir.join(format!("{name}.mid")), mid)?;
    }

    alphas.shuffle(&mut rng);
    let split = alphas.len() * 3 / 5;
    for (name, rows) in [("alpha_1", &alphas[..split]), ("alpha_2", &alphas[split..])] {
        let mut w = csv::Writer::from_path(dir.join(format!("{name}.csv")))?;
        w.write_record(["titre", "proprietaire", "surface", "commune"])?;
        for a in rows {
            let surface = a.surface.map(|s| format!("{s:.2}")).unwrap_or_default();
            w.write_record([a.raw_title.as_str(), &a.owner, &surface, &a.commune])?;
        }
        w.flush()?;
    }

    let config = fixture_config(Path::new("store"));
    let json = serde_json::to_string_pretty(&config).expect("config serializes");
    std::fs::write(dir.join("config.json"), json + "\n")?;

    let mut titles_by_format = BTreeMap::new();
    for g in &graphics {
        *titles_by_format.entry(g.format).or_default() += 1;
    }
    let anomalies = BTreeMap::from([
        (AnomalyKind::TitleParseFailure, spec.alpha_parse_failures),
        (AnomalyKind::OrphanGeometry, spec.orphan_geometry),
        (AnomalyKind::OrphanAttributes, spec.orphan_attributes),
        (AnomalyKind::DuplicateGeometry, spec.duplicate_geometry),
        (AnomalyKind::DuplicateAttributes, spec.duplicate_attributes),
        (AnomalyKind::ConservationConflict, spec.conservation_conflict),
        (AnomalyKind::AreaMismatch, spec.area_mismatch),
    ]);
    Ok(FixtureTruth { graphics: graphics.len(), alphas: alphas.len(), titles_by_format, anomalies, parcels: spec.parcels() })
}

/// Config for the written fixture with paths relative to its directory.
pub fn fixture_config(store_path: &Path) -> MigrationConfig {
    let graphic = |name: &str, title_column: ColumnRef| GraphicInput {
        mif_path: format!("{name}.mif").into(),
        mid_path: Some(format!("{name}.mid").into()),
        title_column,
        source_id: None,
    };
    let alpha = |name: &str| AlphaInput {
        csv_path: format!("{name}.csv").into(),
        title_column: "titre".into(),
        area_column: Some("surface".into()),
        source_id: None,
    };
    MigrationConfig {
        inputs: vec![graphic("graphics_geo", ColumnRef::Name("TITRE".into())), graphic("graphics_lcc", ColumnRef::Index(1))],
        alpha_inputs: vec![alpha("alpha_1"), alpha("alpha_2")],
        target_crs: TargetCrs::Zone { zone: "nord_maroc".into() },
        policy: Default::default(),
        store_path: store_path.to_path_buf(),
        layer_name: "parcels".into(),
        report_path: None,
    }
}

/// Layer of `n` random axis-aligned boxes in `[0, extent]²` with an integer
/// `n` column and a short text column. Ids are `fid:<i>`.
pub fn random_box_layer(name: &str, n: usize, extent: f64, seed: u64) -> Layer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = vec![ColumnDef::new("n", ColumnType::Integer), ColumnDef::new("label", ColumnType::Char(16))];
    let features: Vec<_> = (0..n)
        .map(|i| (format!("fid:{i}"), random_box(&mut rng, extent), vec![AttrValue::Int(i as i64), AttrValue::Text(format!("box {}", i % 17))]))
        .collect();
    Layer::from_features(name, Crs::NonEarth, schema, features).expect("generated layer is valid")
}

pub fn random_box(rng: &mut impl Rng, extent: f64) -> Geometry {
    let w = rng.gen_range(0.001..0.05) * extent;
    let h = rng.gen_range(0.001..0.05) * extent;
    let x = rng.gen_range(0.0..extent - w);
    let y = rng.gen_range(0.0..extent - h);
    Geometry::Region(Region::from(Polygon::rect(x, y, x + w, y + h).expect("valid rect")))
}

/// Title stored in the service fixture under its full `F3` spelling.
pub const SERVICE_TITLE: &str = "03/T/1111/20";

/// Store for service and acceptance tests: the migrated default fixture as
/// `parcels` (plus one parcel stored as [`SERVICE_TITLE`]), 2000 random
/// boxes as `boxes` and an empty geographic layer `empty`. The store is
/// saved under `dir/store`.
pub fn write_service_store(dir: &Path, seed: u64) -> Result<std::path::PathBuf, Box<dyn std::error::Error>> {
    write_migration_fixture(dir, seed, &FixtureSpec::default())?;
    let config = MigrationConfig::from_file(&dir.join("config.json"))?;
    crate::migration::run_migration(&config)?;
    let mut catalog = crate::store::load(&config.store_path)?;

    let mut parcels = catalog.layer("parcels")?.clone();
    let key = crate::title::parse_title(SERVICE_TITLE)?.0;
    let bare = key.with_conservation(None);
    let taken: Vec<String> = parcels.find_title(&bare).into_iter().chain(parcels.find_title(&key)).map(str::to_string).collect();
    for id in taken {
        parcels.delete(&id);
    }
    let square = Polygon::rect(499_000.0, 299_000.0, 499_040.0, 299_030.0)?;
    let nulls = vec![AttrValue::Null; parcels.schema().len()];
    parcels.put(&crate::title::canonical_key(&key), Geometry::Region(Region::from(square)), nulls)?;
    catalog.insert_layer(parcels);
    catalog.insert_layer(random_box_layer("boxes", 2000, 1000.0, seed));
    catalog.create_layer("empty", Crs::Geographic, Vec::new())?;
    crate::store::save(&catalog, &config.store_path)?;
    Ok(config.store_path)
}
