//! Acceptance suite: one PASS/FAIL line per check, each under a wall-clock limit.
//! Run with `cargo test -p parcel-forge-cli --test acceptance`.

use parcel_forge::fixtures::{random_box, random_box_layer, write_migration_fixture, write_service_store, FixtureSpec, FixtureTruth};
use parcel_forge::geometry::{Coord, Envelope, Geometry, Polygon, Region};
use parcel_forge::geoprocessing::{buffer, intersect, select, union, SpatialPredicate};
use parcel_forge::migration::{run_migration, run_migration_with, MigrationConfig, MigrationReport, Stage};
use parcel_forge::projection::{fit_affine, lcc_forward, lcc_inverse, GeoCoord, LccParams, ZoneRegistry};
use parcel_forge::schema::AttrValue;
use parcel_forge::store::{self, Catalog, Layer};
use parcel_forge::title::{format_title, parse_title, same_title, TitleFormat, TitleMatch};
use parcel_forge::{to_wkt, AnomalyKind};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};
use support::mif_tables::{corpus, round_trip, table};
use support::{control_points, normal_equations_fit, random_affine, random_region, random_title_key, rms, ParityIndex};

#[path = "../../core/tests/support/mod.rs"]
mod support;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn titles() -> Outcome {
    let keys: Vec<_> = ["T1111/20", "T/1111/20", "03/T/1111/20"]
        .iter()
        .map(|s| parse_title(s).map_err(|e| format!("{s}: {e}")))
        .collect::<Result<_, _>>()?;
    for (a, _) in &keys {
        for (b, _) in &keys {
            ensure!(same_title(a, b) == TitleMatch::Same, "{a} vs {b} not Same");
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut trips = 0;
    for _ in 0..10_000 {
        let key = random_title_key(&mut rng);
        let formats: &[TitleFormat] = if key.conservation().is_some() { &TitleFormat::ALL } else { &TitleFormat::ALL[..2] };
        for &f in formats {
            let text = format_title(&key, f).map_err(|e| format!("{key}: {e}"))?;
            let back = parse_title(&text).map_err(|e| format!("{text}: {e}"))?;
            // F1 and F2 carry no conservation code
            let want = if f == TitleFormat::F3 { key.clone() } else { key.with_conservation(None) };
            ensure!(back == (want, f), "{text} parsed as {:?}", back);
            trips += 1;
        }
    }
    Ok(format!("3 spellings pairwise Same, {trips} exact round trips over 10000 keys"))
}

fn mif_round_trip() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/corpus");
    let tables = corpus(&dir);
    ensure!(tables.len() == 25, "corpus has {} files", tables.len());
    for (name, t) in &tables {
        ensure!(&round_trip(t) == t, "{name} is not a fixpoint");
    }
    let config = Config { cases: 500, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner
        .run(&table(), |t| {
            proptest::prop_assert_eq!(round_trip(&t), t);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("25 corpus files and 500 random tables, 0 mismatches".into())
}

fn overlay() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_ie, mut worst_agree, mut excluded) = (0.0f64, 1.0f64, 0usize);
    for pair in 0..200 {
        let a = random_region(&mut rng);
        let b = random_region(&mut rng);
        let (i, u) = (intersect(&a, &b), union(&a, &b));
        let ie = ((u.area() + i.area()) - (a.area() + b.area())).abs() / (a.area() + b.area());
        worst_ie = worst_ie.max(ie);
        let idx: Vec<ParityIndex> = [&a, &b, &i, &u].iter().map(|r| ParityIndex::new(r.rings(), 1e-6)).collect();
        let env = a.envelope().unwrap().union(&b.envelope().unwrap());
        let (mut total, mut ok) = (0usize, 0usize);
        for _ in 0..100_000 {
            let p = Coord::new(rng.gen_range(env.min_x..env.max_x), rng.gen_range(env.min_y..env.max_y));
            if idx.iter().any(|x| x.near(p)) {
                excluded += 1;
                continue;
            }
            total += 1;
            let [ia, ib, ii, iu] = [0, 1, 2, 3].map(|k| idx[k].inside(p));
            ok += usize::from(ii == (ia && ib) && iu == (ia || ib));
        }
        let agree = ok as f64 / total as f64;
        ensure!(agree >= 0.999, "pair {pair}: agreement {agree}");
        worst_agree = worst_agree.min(agree);
    }
    ensure!(worst_ie < 1e-6, "inclusion-exclusion error {worst_ie:e}");
    Ok(format!("200 pairs, worst inclusion-exclusion {worst_ie:.1e}, worst agreement {worst_agree:.6}, {excluded} band samples skipped"))
}

fn buffers() -> Outcome {
    let inscribed = |q: u32, r: f64| 2.0 * q as f64 * r * r * (PI / (2.0 * q as f64)).sin();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (q, r) = (rng.gen_range(1..32), rng.gen_range(1e-3..1e3));
        let p = Geometry::Point(Coord::new(rng.gen_range(-1e4..1e4), rng.gen_range(-1e4..1e4)));
        let got = buffer(&p, r, q).map_err(|e| e.to_string())?.area();
        worst = worst.max((got - inscribed(q, r)).abs() / inscribed(q, r));

        let (x, s, r) = (rng.gen_range(-1e3..1e3), rng.gen_range(0.1..100.0), rng.gen_range(0.01..50.0));
        let sq = Geometry::Region(Region::from(Polygon::rect(x, x, x + s, x + s).unwrap()));
        let want = s * s + 4.0 * s * r + inscribed(q, r);
        let got = buffer(&sq, r, q).map_err(|e| e.to_string())?.area();
        worst = worst.max((got - want).abs() / want);
    }
    ensure!(worst < 1e-9, "relative area error {worst:e}");
    Ok(format!("200 point and 200 square buffers, worst relative error {worst:.1e}"))
}

fn projection() -> Outcome {
    let reg = ZoneRegistry::builtin();
    let zones: Vec<LccParams> = reg.zone_names().map(|z| reg.zone(z).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in &zones {
        for _ in 0..1000 {
            let g = GeoCoord::new(p.lon_0 + rng.gen_range(-6.0..6.0), p.lat_0 + rng.gen_range(-4.0..4.0));
            let back = lcc_inverse(lcc_forward(g, p).map_err(|e| e.to_string())?, p).map_err(|e| e.to_string())?;
            ensure!((back.lon - g.lon).abs() < 1e-9 && (back.lat - g.lat).abs() < 1e-9, "{g:?} -> {back:?}");
            let c = Coord::new(p.false_easting + rng.gen_range(-5e5..5e5), p.false_northing + rng.gen_range(-4e5..4e5));
            let back = lcc_forward(lcc_inverse(c, p).map_err(|e| e.to_string())?, p).map_err(|e| e.to_string())?;
            ensure!(back.distance(&c) < 1e-6, "{c:?} -> {back:?}");
        }
    }
    let nord = reg.zone("nord_maroc").ok_or("nord_maroc missing")?;
    let c = lcc_forward(GeoCoord::new(-6.8326, 34.0209), &nord).map_err(|e| e.to_string())?;
    let miss = c.distance(&Coord::new(367_720.609_517_438_19, 380_836.324_545_599_75));
    ensure!(miss < 1e-3, "reference point off by {miss} m");

    for noise in [0.0, 2.5] {
        for _ in 0..500 {
            let t = random_affine(&mut rng);
            let n = rng.gen_range(4..30);
            let pts = control_points(&mut rng, &t, n, noise);
            let fit = fit_affine(&pts).map_err(|e| e.to_string())?;
            let want = if noise == 0.0 { t } else { normal_equations_fit(&pts) };
            for (g, w) in fit.transform.coefficients().iter().zip(want.coefficients()) {
                ensure!((g - w).abs() < 1e-9 * w.abs().max(1.0), "noise {noise}: {g} vs {w}");
            }
            let scale = if noise == 0.0 { want.c.abs().max(want.f.abs()) } else { fit.rms };
            ensure!((fit.rms - rms(&want, &pts)).abs() < 1e-9 * scale.max(1.0), "rms {} vs {}", fit.rms, rms(&want, &pts));
        }
    }
    Ok(format!("{} zones x 1000 points both ways, reference point within {miss:.1e} m, 1000 affine fits", zones.len()))
}

fn scan(layer: &Layer, q: &Envelope) -> Vec<String> {
    layer.iter().filter(|(_, f)| f.geometry.envelope().unwrap().intersects(q)).map(|(id, _)| id.to_string()).collect()
}

fn random_query(rng: &mut impl Rng, extent: f64) -> Envelope {
    let (w, h) = (rng.gen_range(0.0..0.3) * extent, rng.gen_range(0.0..0.3) * extent);
    let (x, y) = (rng.gen_range(-0.1..1.0) * extent, rng.gen_range(-0.1..1.0) * extent);
    Envelope::new(x, y, x + w, y + h)
}

fn index() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut layer = random_box_layer("boxes", 300, 1000.0, 6);
    for step in 0..1000 {
        let id = format!("fid:{}", rng.gen_range(0..600));
        if rng.gen_bool(0.6) {
            let g = random_box(&mut rng, 1000.0);
            layer.put(&id, g, vec![AttrValue::Int(step), AttrValue::Null]).map_err(|e| e.to_string())?;
        } else {
            layer.delete(&id);
        }
        layer.check_index().map_err(|e| format!("step {step}: {e}"))?;
    }
    let mut hits = 0;
    for n in 0..10_000 {
        let q = random_query(&mut rng, 1000.0);
        let got = layer.bbox_query(&q);
        ensure!(got == scan(&layer, &q), "query {n} differs from scan");
        hits += got.len();
    }
    Ok(format!("1000 mutations with invariants checked, 10000 queries equal scan ({hits} hits)"))
}

fn without_timings(jsonl: &str) -> String {
    jsonl.lines().filter(|l| !l.contains(r#""record":"stage""#) && !l.contains(r#""record":"duration""#)).collect()
}

fn tree_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn counts_match(r: &MigrationReport, t: &FixtureTruth) -> Result<(), String> {
    ensure!(r.features_read == t.graphics && r.mid_rows_read == t.graphics, "features read {}", r.features_read);
    ensure!(r.alpha_rows_read == t.alphas, "alpha rows {}", r.alpha_rows_read);
    for f in TitleFormat::ALL {
        ensure!(r.title_count(f) == t.titles_by_format[&f], "{f} titles {}", r.title_count(f));
    }
    for k in AnomalyKind::ALL {
        ensure!(r.anomaly_count(k) == t.anomalies[&k], "{k}: {} vs {}", r.anomaly_count(k), t.anomalies[&k]);
    }
    ensure!(r.parcels_written == t.parcels, "parcels {}", r.parcels_written);
    ensure!(r.records_balance(), "records do not balance");
    Ok(())
}

fn migration() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let truth = write_migration_fixture(dir, 2024, &FixtureSpec::default()).map_err(|e| e.to_string())?;
    let mut config = MigrationConfig::from_file(&dir.join("config.json")).map_err(|e| e.to_string())?;
    let mut slowest = Duration::ZERO;
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        config.store_path = dir.join(format!("store_{name}"));
        config.report_path = Some(dir.join(format!("report_{name}")));
        let start = Instant::now();
        let report = run_migration(&config).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed());
        counts_match(&report, &truth)?;
        runs.push((without_timings(&report.to_jsonl()), tree_bytes(&config.store_path)));
    }
    ensure!(runs[0] == runs[1], "runs differ");
    ensure!(slowest < Duration::from_secs(10), "a run took {slowest:?}");

    config.store_path = dir.join("store_faults");
    config.report_path = None;
    for stage in Stage::ALL {
        let mut hook = |s: Stage| if s == stage { Err(format!("injected at {s}")) } else { Ok(()) };
        let err = run_migration_with(&config, &mut hook).err().ok_or(format!("no error at {stage}"))?;
        ensure!(err.stage() == Some(stage), "failure at {stage} reported as {err}");
        ensure!(!config.store_path.exists(), "store left behind after failure at {stage}");
    }
    Ok(format!("{} parcels, all planted counts reproduced, 2 identical runs (slowest {slowest:.2?}), 7 injected faults", truth.parcels))
}

fn service() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = write_service_store(tmp.path(), 8).map_err(|e| e.to_string())?;
    let catalog = Arc::new(store::load(&path).map_err(|e| e.to_string())?);
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(service_checks(catalog))
}

fn extent(layer: &Layer) -> Envelope {
    layer.iter().map(|(_, f)| f.geometry.envelope().unwrap()).reduce(|a, b| a.union(&b)).unwrap()
}

enum Probe {
    Bbox(String, Envelope),
    Query(String, SpatialPredicate, Geometry),
    Title(String),
}

fn probes(catalog: &Catalog) -> Vec<Probe> {
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let mut out = Vec::new();
    for i in 0..150 {
        let name = if i % 2 == 0 { "parcels" } else { "boxes" };
        let e = extent(catalog.layer(name).unwrap());
        let q = random_query(&mut rng, 1.0);
        let w = Envelope::new(
            e.min_x + q.min_x * e.width(),
            e.min_y + q.min_y * e.height(),
            e.min_x + q.max_x * e.width(),
            e.min_y + q.max_y * e.height(),
        );
        if i < 100 {
            out.push(Probe::Bbox(name.into(), w));
        } else {
            let pred = [SpatialPredicate::Intersects, SpatialPredicate::Contains, SpatialPredicate::Within][i % 3];
            let (cx, cy) = ((w.min_x + w.max_x) / 2.0, (w.min_y + w.max_y) / 2.0);
            let (rx, ry) = (w.width().max(1.0) / 2.0, w.height().max(1.0) / 2.0);
            let tri = Polygon::new(
                parcel_forge::Ring::new(vec![Coord::new(cx - rx, cy - ry), Coord::new(cx + rx, cy - ry * 0.5), Coord::new(cx, cy + ry)]).unwrap(),
                vec![],
            )
            .unwrap();
            out.push(Probe::Query(name.into(), pred, Geometry::Region(Region::from(tri))));
        }
    }
    for t in ["T1111/20", "T/1111/20", "03/T/1111/20"] {
        out.push(Probe::Title(t.into()));
    }
    out
}

fn expected(catalog: &Catalog, p: &Probe) -> Vec<String> {
    match p {
        Probe::Bbox(name, w) => catalog.layer(name).unwrap().bbox_query(w).into_iter().map(str::to_string).collect(),
        Probe::Query(name, pred, g) => select(catalog.layer(name).unwrap(), None, Some((*pred, g))).unwrap(),
        Probe::Title(t) => {
            let layer = catalog.layer("parcels").unwrap();
            layer.find_title(&parse_title(t).unwrap().0).into_iter().take(1).map(str::to_string).collect()
        }
    }
}

async fn ask(client: &reqwest::Client, base: &str, p: &Probe) -> Result<Vec<String>, String> {
    let req = match p {
        Probe::Bbox(name, w) => {
            let bbox = format!("{},{},{},{}", w.min_x, w.min_y, w.max_x, w.max_y);
            client.get(format!("{base}/parcels")).query(&[("layer", name.as_str()), ("bbox", &bbox), ("limit", "10000")])
        }
        Probe::Query(name, pred, g) => client
            .post(format!("{base}/query"))
            .json(&json!({"layer": name, "predicate": pred.to_string(), "wkt": to_wkt(g).unwrap()})),
        Probe::Title(t) => client.get(format!("{base}/parcels")).query(&[("layer", "parcels"), ("title", t.as_str())]),
    };
    let resp = req.send().await.map_err(|e| e.to_string())?;
    let status = resp.status();
    let body: Value = resp.json().await.map_err(|e| e.to_string())?;
    ensure!(status.is_success(), "{status}: {body}");
    let ids = match body["type"].as_str() {
        Some("Feature") => vec![body["id"].as_str().unwrap_or_default().to_string()],
        _ => body["features"].as_array().ok_or("no features")?.iter().map(|f| f["id"].as_str().unwrap_or_default().to_string()).collect(),
    };
    Ok(ids)
}

async fn service_checks(catalog: Arc<Catalog>) -> Outcome {
    let (listener, addr) = parcel_forge_service::bind("127.0.0.1:0").await.map_err(|e| e.to_string())?;
    let server = tokio::spawn(parcel_forge_service::serve_on(listener, Arc::clone(&catalog)));
    let base = format!("http://{addr}");
    let probes = Arc::new(probes(&catalog));
    let workers: Vec<_> = (0..32)
        .map(|w| {
            let (probes, base) = (Arc::clone(&probes), base.clone());
            tokio::spawn(async move {
                let client = reqwest::Client::new();
                let mut out = Vec::new();
                for i in (w..probes.len()).step_by(32) {
                    out.push((i, ask(&client, &base, &probes[i]).await));
                }
                out
            })
        })
        .collect();
    let mut nonempty = 0;
    for (i, got) in futures::future::join_all(workers).await.into_iter().flat_map(Result::unwrap) {
        let got = got.map_err(|e| format!("probe {i}: {e}"))?;
        let want = expected(&catalog, &probes[i]);
        ensure!(got == want, "probe {i}: {} ids over HTTP, {} in process", got.len(), want.len());
        nonempty += usize::from(!want.is_empty());
    }
    server.abort();
    let titles = probes.iter().filter(|p| matches!(p, Probe::Title(_))).count();
    Ok(format!("100 bbox + 50 predicate probes and {titles} title spellings over 32 clients, {nonempty} non-empty, all equal"))
}

fn main() {
    let checks: [(&str, u64, fn() -> Outcome); 8] = [
        ("title conversion", 1, titles),
        ("mif/mid round trip", 5, mif_round_trip),
        ("overlay oracle", 60, overlay),
        ("buffer areas", 1, buffers),
        ("projection", 2, projection),
        ("spatial index", 30, index),
        ("migration", 30, migration),
        ("service equivalence", 30, service),
    ];
    let mut failed = 0;
    for (name, limit, check) in checks {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(_) if took > Duration::from_secs(limit) => Err(format!("took {took:.2?}, limit {limit} s")),
            o => o,
        };
        match outcome {
            Ok(detail) => println!("PASS  {name:<20} {:>8.3} s / {limit:>2} s  {detail}", took.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<20} {:>8.3} s / {limit:>2} s  {why}", took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 8 acceptance checks failed");
        std::process::exit(1);
    }
    println!("all 8 acceptance checks passed");
}
