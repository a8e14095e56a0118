use parcel_forge::fixtures::{write_migration_fixture, FixtureSpec, FixtureTruth};
use parcel_forge::integration::AnomalyKind;
use parcel_forge::migration::{run_migration, run_migration_with, validate, MigrationConfig, Stage};
use parcel_forge::store;
use parcel_forge::title::TitleFormat;
use parcel_forge::MigrationReport;
use std::fs;
use std::path::{Path, PathBuf};

fn fixture(dir: &Path) -> (MigrationConfig, FixtureTruth) {
    let truth = write_migration_fixture(dir, 20201, &FixtureSpec::default()).unwrap();
    (MigrationConfig::from_file(&dir.join("config.json")).unwrap(), truth)
}

fn without_timings(jsonl: &str) -> String {
    jsonl.lines().filter(|l| !l.contains(r#""record":"stage""#) && !l.contains(r#""record":"duration""#)).collect()
}

fn check_counts(report: &MigrationReport, truth: &FixtureTruth) {
    assert_eq!(report.features_read, truth.graphics);
    assert_eq!(report.mid_rows_read, truth.graphics);
    assert_eq!(report.alpha_rows_read, truth.alphas);
    for f in TitleFormat::ALL {
        assert_eq!(report.title_count(f), truth.titles_by_format[&f], "{f}");
    }
    for k in AnomalyKind::ALL {
        assert_eq!(report.anomaly_count(k), truth.anomalies[&k], "{k}");
    }
    assert_eq!(report.parcels_written, truth.parcels);
    assert!(report.records_balance());
}

#[test]
fn fixture_reproduces_planted_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (config, truth) = fixture(dir.path());
    assert_eq!(truth.graphics, 1000);
    assert_eq!(truth.alphas, 950);
    assert_eq!(truth.titles_by_format[&TitleFormat::F1], 400);
    assert_eq!(truth.anomalies[&AnomalyKind::OrphanGeometry], 60);

    let dry = validate(&config).unwrap();
    assert!(!config.store_path.exists());
    check_counts(&dry, &truth);
    assert_eq!(dry.reprojected, 1000);

    let report = run_migration(&config).unwrap();
    check_counts(&report, &truth);
    assert_eq!(without_timings(&dry.to_jsonl()), without_timings(&report.to_jsonl()));

    let catalog = store::load(&config.store_path).unwrap();
    let layer = catalog.layer("parcels").unwrap();
    assert_eq!(layer.len(), truth.parcels);
    layer.check_index().unwrap();
    assert!(layer.ids().all(|id| parcel_forge::title::parse_canonical_key(id).is_some()));
}

fn store_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (PathBuf::from(p.file_name().unwrap()), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn runs_are_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (mut config, _) = fixture(dir.path());
    config.store_path = dir.path().join("store_a");
    config.report_path = Some(dir.path().join("report_a"));
    let a = run_migration(&config).unwrap();
    config.store_path = dir.path().join("store_b");
    config.report_path = Some(dir.path().join("report_b"));
    let b = run_migration(&config).unwrap();
    assert_eq!(store_bytes(&dir.path().join("store_a")), store_bytes(&dir.path().join("store_b")));
    assert_eq!(without_timings(&a.to_jsonl()), without_timings(&b.to_jsonl()));
    assert_eq!(a.anomalies_csv(), b.anomalies_csv());
    let csv = fs::read_to_string(dir.path().join("report_a/anomalies.csv")).unwrap();
    assert_eq!(csv.lines().count(), a.anomalies.len() + 1);
    assert!(fs::read_to_string(dir.path().join("report_a/report.txt")).unwrap().contains("OrphanGeometry"));
}

#[test]
fn fault_injection_never_leaves_partial_store() {
    let dir = tempfile::tempdir().unwrap();
    let (config, _) = fixture(dir.path());
    for stage in Stage::ALL {
        let mut hook = |s: Stage| if s == stage { Err(format!("injected at {s}")) } else { Ok(()) };
        let err = run_migration_with(&config, &mut hook).unwrap_err();
        assert_eq!(err.stage(), Some(stage));
        assert!(!config.store_path.exists(), "store exists after failure at {stage}");
        let leftovers: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .filter(|n| n.starts_with('.'))
            .collect();
        assert!(leftovers.is_empty(), "{leftovers:?}");
    }

    // an existing store survives a failed re-run untouched
    run_migration(&config).unwrap();
    let before = store_bytes(&config.store_path);
    let mut hook = |s: Stage| if s == Stage::Save { Err("injected".to_string()) } else { Ok(()) };
    run_migration_with(&config, &mut hook).unwrap_err();
    assert_eq!(store_bytes(&config.store_path), before);
}

#[test]
fn empty_alpha_list() {
    let dir = tempfile::tempdir().unwrap();
    let (mut config, _) = fixture(dir.path());
    config.alpha_inputs.clear();
    let r = validate(&config).unwrap();
    assert_eq!(r.parcels_written, 0);
    assert_eq!(r.anomaly_count(AnomalyKind::OrphanGeometry), 1000);
    assert_eq!(r.anomaly_count(AnomalyKind::DuplicateGeometry), 0);
}

#[test]
fn stage_errors_name_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let (config, _) = fixture(dir.path());

    let mut missing = config.clone();
    missing.inputs[0].mif_path = dir.path().join("nope.mif");
    let err = run_migration(&missing).unwrap_err();
    assert_eq!(err.stage(), Some(Stage::Parse));
    assert!(err.to_string().contains("nope.mif"));
    assert!(!missing.store_path.exists());

    let mid = config.inputs[1].mid_path.clone().unwrap();
    let text = fs::read_to_string(&mid).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    fs::write(&mid, lines[..lines.len() - 3].join("\n") + "\n").unwrap();
    match validate(&config).unwrap_err() {
        parcel_forge::MigrationError::Stage { stage, message, .. } => {
            assert_eq!(stage, Stage::Parse);
            assert!(message.contains("rows"), "{message}");
        }
        other => panic!("{other}"),
    }

    fs::write(&mid, text).unwrap();
    let mif = config.inputs[1].mif_path.clone();
    let header = fs::read_to_string(&mif).unwrap().replace("Projection 3, 104", "Projection 9, 104");
    fs::write(&mif, header).unwrap();
    assert_eq!(validate(&config).unwrap_err().stage(), Some(Stage::Reproject));
}

#[test]
fn migrated_layer_exports() {
    let dir = tempfile::tempdir().unwrap();
    let (config, truth) = fixture(dir.path());
    run_migration(&config).unwrap();
    let catalog = store::load(&config.store_path).unwrap();
    let layer = catalog.layer("parcels").unwrap();

    let doc: serde_json::Value = serde_json::from_str(&store::export_geojson(layer).unwrap()).unwrap();
    assert_eq!(doc["type"], "FeatureCollection");
    let features = doc["features"].as_array().unwrap();
    assert_eq!(features.len(), truth.parcels);
    for f in features {
        assert_eq!(f["type"], "Feature");
        assert!(f["id"].is_string());
        let geom = &f["geometry"];
        assert!(matches!(geom["type"].as_str(), Some("Polygon" | "MultiPolygon")));
        let rings: Vec<&serde_json::Value> = match geom["type"].as_str().unwrap() {
            "Polygon" => geom["coordinates"].as_array().unwrap().iter().collect(),
            _ => geom["coordinates"].as_array().unwrap().iter().flat_map(|p| p.as_array().unwrap()).collect(),
        };
        for ring in rings {
            let pts = ring.as_array().unwrap();
            assert!(pts.len() >= 4);
            assert_eq!(pts.first(), pts.last());
            for p in pts {
                let (lon, lat) = (p[0].as_f64().unwrap(), p[1].as_f64().unwrap());
                assert!((-7.0..-4.0).contains(&lon) && (32.0..35.0).contains(&lat), "{lon} {lat}");
            }
        }
    }

    let sql = store::export_sql(layer, 26191).unwrap();
    assert_eq!(sql.lines().filter(|l| l.starts_with("INSERT INTO")).count(), truth.parcels);
    assert!(sql.contains("ST_GeomFromText('POLYGON"));
}
