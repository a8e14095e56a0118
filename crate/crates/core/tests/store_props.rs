use parcel_forge::fixtures::{random_box, random_box_layer};
use parcel_forge::geometry::{Coord, Envelope, Geometry};
use parcel_forge::projection::{Crs, ZoneRegistry};
use parcel_forge::schema::{AttrValue, ColumnDef, ColumnType};
use parcel_forge::store::{self, Catalog, Layer, ParcelStore, RTree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

const EXTENT: f64 = 1000.0;

fn random_query(rng: &mut impl Rng) -> Envelope {
    let (w, h) = (rng.gen_range(0.0..0.3) * EXTENT, rng.gen_range(0.0..0.3) * EXTENT);
    let (x, y) = (rng.gen_range(-0.1..1.0) * EXTENT, rng.gen_range(-0.1..1.0) * EXTENT);
    Envelope::new(x, y, x + w, y + h)
}

fn scan(layer: &Layer, q: &Envelope) -> Vec<String> {
    layer.iter().filter(|(_, f)| f.geometry.envelope().unwrap().intersects(q)).map(|(id, _)| id.to_string()).collect()
}

#[test]
fn mutations_keep_index_coherent() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut layer = random_box_layer("boxes", 300, EXTENT, 1);
    layer.check_index().unwrap();
    for step in 0..1000 {
        let id = format!("fid:{}", rng.gen_range(0..600));
        if rng.gen_bool(0.6) {
            let geom = if rng.gen_bool(0.1) { Geometry::Point(Coord::new(rng.gen_range(0.0..EXTENT), rng.gen_range(0.0..EXTENT))) } else { random_box(&mut rng, EXTENT) };
            layer.put(&id, geom, vec![AttrValue::Int(step), AttrValue::Null]).unwrap();
        } else {
            layer.delete(&id);
        }
        layer.check_index().unwrap_or_else(|e| panic!("step {step}: {e}"));
        let q = random_query(&mut rng);
        assert_eq!(layer.bbox_query(&q), scan(&layer, &q), "step {step}");
    }
    for _ in 0..10_000 {
        let q = random_query(&mut rng);
        assert_eq!(layer.bbox_query(&q), scan(&layer, &q));
    }
}

#[test]
fn rtree_invariants_under_churn() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut items: BTreeMap<u32, Envelope> = BTreeMap::new();
    let mut tree: RTree<u32> = RTree::new();
    for step in 0..3000u32 {
        if items.is_empty() || rng.gen_bool(0.55) {
            let env = random_query(&mut rng);
            tree.insert(env, step);
            items.insert(step, env);
        } else {
            let k = *items.keys().nth(rng.gen_range(0..items.len())).unwrap();
            assert!(tree.remove(&items[&k], &k));
            items.remove(&k);
        }
        tree.check_invariants().unwrap_or_else(|e| panic!("step {step}: {e}"));
        assert_eq!(tree.len(), items.len());
    }
    let bulk = RTree::bulk_load(items.iter().map(|(k, e)| (*e, *k)).collect());
    bulk.check_invariants().unwrap();
    for _ in 0..2000 {
        let q = random_query(&mut rng);
        let want: Vec<u32> = items.iter().filter(|(_, e)| e.intersects(&q)).map(|(k, _)| *k).collect();
        for t in [&tree, &bulk] {
            let mut got: Vec<u32> = t.query(&q).into_iter().copied().collect();
            got.sort_unstable();
            assert_eq!(got, want);
        }
    }
}

fn mixed_catalog() -> Catalog {
    let mut cat = Catalog::new();
    cat.insert_layer(random_box_layer("boxes", 200, EXTENT, 7));
    let zone = ZoneRegistry::builtin().default_zone();
    let schema = vec![
        ColumnDef::new("owner", ColumnType::Char(40)),
        ColumnDef::new("area", ColumnType::Decimal { width: 12, precision: 2 }),
        ColumnDef::new("seen", ColumnType::Date),
        ColumnDef::new("ok", ColumnType::Logical),
    ];
    cat.create_layer("parcels", Crs::Lcc(zone), schema).unwrap();
    let date = chrono::NaiveDate::from_ymd_opt(2019, 6, 30).unwrap();
    let rows = [
        ("03/T/1111/20", "POLYGON((500000.125 300000.5,500100 300000.5,500100 300100.75,500000.125 300000.5))", "Alaoui\t\"A\"\nline two"),
        ("??/R/7/1", "POINT(512345.678901 301234.5)", ""),
        ("12/D/404/3", "LINESTRING(500000 300000,500010 300010,500020 300000)", "Société Générale"),
    ];
    for (i, (id, wkt, owner)) in rows.iter().enumerate() {
        let attrs = vec![AttrValue::Text(owner.to_string()), AttrValue::Real(1234.5 + i as f64), AttrValue::Date(date), AttrValue::Bool(i % 2 == 0)];
        cat.put("parcels", id, parcel_forge::from_wkt(wkt).unwrap(), attrs).unwrap();
    }
    cat.create_layer("empty", Crs::Geographic, vec![]).unwrap();
    cat
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn save_load_save_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cat = mixed_catalog();
    store::save(&cat, &a).unwrap();
    let loaded = store::load(&a).unwrap();
    assert!(loaded.approx_eq(&cat, 1e-9));
    for layer in loaded.layers() {
        layer.check_index().unwrap();
    }
    store::save(&loaded, &b).unwrap();
    assert_eq!(dir_bytes(&a), dir_bytes(&b));

    // dropping a layer removes its file on the next save
    let mut smaller = loaded;
    smaller.drop_layer("boxes");
    store::save(&smaller, &a).unwrap();
    assert!(!a.join("boxes.psl").exists());
    assert!(store::load(&a).unwrap().approx_eq(&smaller, 1e-9));
}

#[test]
fn readers_see_their_snapshot_under_concurrent_writes() {
    let store = Arc::new(ParcelStore::new({
        let mut c = Catalog::new();
        c.insert_layer(random_box_layer("boxes", 100, EXTENT, 11));
        c
    }));
    let done = Arc::new(AtomicBool::new(false));
    let writer = {
        let (store, done) = (Arc::clone(&store), Arc::clone(&done));
        std::thread::spawn(move || {
            let mut rng = ChaCha8Rng::seed_from_u64(12);
            for i in 0..400 {
                let geom = random_box(&mut rng, EXTENT);
                store
                    .commit(|c| {
                        c.put("boxes", &format!("fid:{}", 100 + i), geom, vec![AttrValue::Int(i), AttrValue::Null])?;
                        if i % 3 == 0 {
                            c.delete("boxes", &format!("fid:{}", i / 3))?;
                        }
                        Ok(())
                    })
                    .unwrap();
            }
            done.store(true, Ordering::SeqCst);
        })
    };
    let readers: Vec<_> = (0..4)
        .map(|r| {
            let (store, done) = (Arc::clone(&store), Arc::clone(&done));
            std::thread::spawn(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(20 + r);
                let mut checked = 0;
                while !done.load(Ordering::SeqCst) || checked < 20 {
                    let snap = store.snapshot();
                    let layer = snap.layer("boxes").unwrap();
                    let ids: Vec<String> = layer.ids().map(str::to_string).collect();
                    let version = snap.version();
                    let q = random_query(&mut rng);
                    let before = layer.bbox_query(&q).len();
                    std::thread::yield_now();
                    assert_eq!(snap.version(), version);
                    assert_eq!(layer.ids().map(str::to_string).collect::<Vec<_>>(), ids);
                    assert_eq!(layer.bbox_query(&q).len(), before);
                    assert_eq!(layer.bbox_query(&q), scan(layer, &q));
                    checked += 1;
                }
                checked
            })
        })
        .collect();
    writer.join().unwrap();
    for r in readers {
        assert!(r.join().unwrap() >= 20);
    }
    let last = store.snapshot();
    last.layer("boxes").unwrap().check_index().unwrap();
    assert_eq!(last.layer("boxes").unwrap().len(), 100 + 400 - 134);
}

#[test]
fn failed_commit_publishes_nothing() {
    let store = ParcelStore::new(mixed_catalog());
    let before = store.snapshot();
    let err = store.commit(|c| {
        c.delete("boxes", "fid:1")?;
        c.put("nope", "x", Geometry::Point(Coord::new(0.0, 0.0)), vec![])
    });
    assert!(err.is_err());
    assert!(Arc::ptr_eq(&before, &store.snapshot()));
}

#[test]
fn corrupt_files_name_file_and_line() {
    let tmp = tempfile::tempdir().unwrap();
    store::save(&mixed_catalog(), tmp.path()).unwrap();
    let psl = tmp.path().join("parcels.psl");
    let text = fs::read_to_string(&psl).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[1] = "??/R/7/1\tPOINT(1 2\t[]";
    fs::write(&psl, lines.join("\n") + "\n").unwrap();
    match store::load(tmp.path()).unwrap_err() {
        store::StoreError::CorruptStore { file, line, .. } => {
            assert!(file.ends_with("parcels.psl"), "{file:?}");
            assert_eq!(line, 2);
        }
        e => panic!("{e}"),
    }
}
