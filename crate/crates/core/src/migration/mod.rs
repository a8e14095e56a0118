//! End-to-end migration: legacy MIF/MID graphics and alphanumeric CSVs in,
//! a saved parcel store and a report out.

mod config;
mod report;

pub use config::{AlphaInput, ColumnRef, GraphicInput, MigrationConfig, TargetCrs};
pub use report::{MigrationReport, StageTiming};

use crate::geometry::{Geometry, GeometryKind};
use crate::integration::{load_alpha_csv, merge_sources, AlphaMapping, AlphaRecord, GraphicRecord, IntegrationError};
use crate::mif::{coordsys_to_projection, read_mif_mid, FeatureTable, MifError, MifFile};
use crate::projection::{reproject_geometry, Crs};
use crate::schema::{is_identifier, AttrValue, ColumnDef, ColumnType};
use crate::store::{self, Catalog, Layer};
use crate::title::{canonical_key, parse_title};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Parse,
    Titles,
    Reproject,
    Alpha,
    Merge,
    Load,
    Save,
}

impl Stage {
    pub const ALL: [Stage; 7] =
        [Stage::Parse, Stage::Titles, Stage::Reproject, Stage::Alpha, Stage::Merge, Stage::Load, Stage::Save];

    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Parse => "parse",
            Stage::Titles => "titles",
            Stage::Reproject => "reproject",
            Stage::Alpha => "alpha",
            Stage::Merge => "merge",
            Stage::Load => "load",
            Stage::Save => "save",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum MigrationError {
    #[error("config: {0}")]
    Config(String),
    #[error("stage {stage}: {}{}{message}", file.as_ref().map(|f| format!("{}: ", f.display())).unwrap_or_default(), line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Stage { stage: Stage, file: Option<PathBuf>, line: Option<usize>, message: String },
}

impl MigrationError {
    fn at(stage: Stage, file: Option<&Path>, line: Option<usize>, message: impl Into<String>) -> Self {
        MigrationError::Stage { stage, file: file.map(Path::to_path_buf), line, message: message.into() }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            MigrationError::Stage { stage, .. } => Some(*stage),
            MigrationError::Config(_) => None,
        }
    }
}

fn mif_error(input: &GraphicInput, e: MifError) -> MigrationError {
    let file = match &e {
        MifError::Syntax { file: MifFile::Mid, .. } | MifError::Type { .. } => input.mid_path.clone(),
        MifError::Io { path, .. } | MifError::Encoding { path, .. } => Some(path.clone()),
        _ => Some(input.mif_path.clone()),
    };
    MigrationError::Stage { stage: Stage::Parse, file, line: e.line(), message: e.to_string() }
}

/// Called after each stage completes, and during `Save` after the store has
/// been written to its temporary directory but before it is moved into place.
/// Returning an error aborts the run at that point.
pub type StageHook<'a> = &'a mut dyn FnMut(Stage) -> Result<(), String>;

struct Run<'h> {
    started: Instant,
    stage_started: Instant,
    report: MigrationReport,
    hook: Option<StageHook<'h>>,
}

impl<'h> Run<'h> {
    fn finish(&mut self, stage: Stage) -> Result<(), MigrationError> {
        let now = Instant::now();
        self.report.stage_timings.push(StageTiming { stage, seconds: (now - self.stage_started).as_secs_f64() });
        self.stage_started = now;
        self.checkpoint(stage)
    }

    fn checkpoint(&mut self, stage: Stage) -> Result<(), MigrationError> {
        match &mut self.hook {
            Some(h) => h(stage).map_err(|m| MigrationError::at(stage, None, None, m)),
            None => Ok(()),
        }
    }
}

/// Runs every stage and saves the store. The store directory is replaced
/// only after the complete catalog has been written.
pub fn run_migration(config: &MigrationConfig) -> Result<MigrationReport, MigrationError> {
    execute(config, true, None)
}

/// [`run_migration`] with a checkpoint hook, for fault injection.
pub fn run_migration_with(config: &MigrationConfig, hook: StageHook<'_>) -> Result<MigrationReport, MigrationError> {
    execute(config, true, Some(hook))
}

/// Every stage except the store write. Nothing is written to disk.
pub fn validate(config: &MigrationConfig) -> Result<MigrationReport, MigrationError> {
    execute(config, false, None)
}

struct Graphics {
    records: Vec<GraphicRecord>,
    /// Raw CoordSys clause per input, parallel to `config.inputs`.
    coordsys: Vec<Option<String>>,
    /// Input index per record.
    origin: Vec<usize>,
}

fn execute(config: &MigrationConfig, write: bool, hook: Option<StageHook<'_>>) -> Result<MigrationReport, MigrationError> {
    config.validate()?;
    let target = config.target_crs.resolve()?;
    let now = Instant::now();
    let mut run = Run { started: now, stage_started: now, report: MigrationReport::default(), hook };

    let tables = parse_stage(config, &mut run.report)?;
    run.finish(Stage::Parse)?;

    let mut graphics = titles_stage(config, &tables, &mut run.report)?;
    drop(tables);
    run.finish(Stage::Titles)?;

    reproject_stage(config, &mut graphics, &target, &mut run.report)?;
    run.finish(Stage::Reproject)?;

    let alphas = alpha_stage(config, &mut run.report)?;
    run.finish(Stage::Alpha)?;

    let outcome = merge_sources(&graphics.records, &alphas, &config.effective_policy());
    for k in crate::integration::AnomalyKind::ALL {
        run.report.anomalies_by_kind.insert(k, outcome.count(k));
    }
    run.report.unmatched_records = outcome.accounted_records() - 2 * outcome.parcels.len();
    run.finish(Stage::Merge)?;

    let layer = load_stage(config, &target, &outcome.parcels)?;
    run.report.parcels_written = layer.len();
    run.report.anomalies = outcome.anomalies;
    run.finish(Stage::Load)?;

    if write {
        save_stage(config, layer, &mut run)?;
        run.finish(Stage::Save)?;
    }
    run.report.duration_seconds = run.started.elapsed().as_secs_f64();
    if write {
        if let Some(dir) = &config.report_path {
            write_reports(dir, &run.report)?;
        }
    }
    Ok(run.report)
}

fn parse_stage(config: &MigrationConfig, report: &mut MigrationReport) -> Result<Vec<FeatureTable>, MigrationError> {
    let results: Vec<_> = config
        .inputs
        .par_iter()
        .map(|input| read_mif_mid(&input.mif_path, input.mid_path.as_deref()).map_err(|e| mif_error(input, e)))
        .collect();
    let tables = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    for (input, table) in config.inputs.iter().zip(&tables) {
        report.features_read += table.features.len();
        if input.mid_path.is_some() {
            report.mid_rows_read += table.features.len();
        }
    }
    Ok(tables)
}

fn titles_stage(
    config: &MigrationConfig,
    tables: &[FeatureTable],
    report: &mut MigrationReport,
) -> Result<Graphics, MigrationError> {
    let sources = config.graphic_source_ids();
    let mut out = Graphics { records: Vec::new(), coordsys: Vec::new(), origin: Vec::new() };
    for (i, (input, table)) in config.inputs.iter().zip(tables).enumerate() {
        let col = match &input.title_column {
            ColumnRef::Index(n) => (*n < table.header.columns.len()).then_some(*n),
            ColumnRef::Name(name) => table.column_index(name),
        }
        .ok_or_else(|| {
            MigrationError::at(
                Stage::Titles,
                Some(&input.mif_path),
                None,
                format!("title column {:?} not in table", input.title_column),
            )
        })?;
        out.coordsys.push(table.header.coordsys.clone());
        for (n, f) in table.features.iter().enumerate() {
            if f.geometry.kind() != GeometryKind::Region {
                report.non_region_skipped += 1;
                continue;
            }
            let raw_title = f.attrs[col].to_text().trim().to_string();
            if let Ok((_, format)) = parse_title(&raw_title) {
                *report.titles_by_format.entry(format).or_default() += 1;
            }
            out.records.push(GraphicRecord {
                source_id: sources[i].clone(),
                feature_id: n as u64 + 1,
                raw_title,
                geometry: f.geometry.clone(),
            });
            out.origin.push(i);
        }
    }
    Ok(out)
}

fn reproject_stage(
    config: &MigrationConfig,
    graphics: &mut Graphics,
    target: &Crs,
    report: &mut MigrationReport,
) -> Result<(), MigrationError> {
    let Graphics { records, coordsys, origin } = graphics;
    // a missing CoordSys clause means longitude/latitude
    let source_crs = coordsys
        .iter()
        .zip(&config.inputs)
        .map(|(clause, input)| match clause {
            Some(c) => coordsys_to_projection(c)
                .map_err(|e| MigrationError::at(Stage::Reproject, Some(&input.mif_path), None, e.to_string())),
            None => Ok(Crs::Geographic),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let results: Vec<Result<Option<Geometry>, MigrationError>> = records
        .par_iter()
        .zip(origin.par_iter())
        .map(|(r, &i)| {
            let from = &source_crs[i];
            if from == target {
                return Ok(None);
            }
            reproject_geometry(&r.geometry, from, target).map(Some).map_err(|e| {
                MigrationError::at(
                    Stage::Reproject,
                    Some(&config.inputs[i].mif_path),
                    None,
                    format!("feature {}: {e}", r.feature_id),
                )
            })
        })
        .collect();
    for (r, res) in records.iter_mut().zip(results) {
        if let Some(g) = res? {
            r.geometry = g;
            report.reprojected += 1;
        }
    }
    Ok(())
}

fn alpha_stage(config: &MigrationConfig, report: &mut MigrationReport) -> Result<Vec<AlphaRecord>, MigrationError> {
    let sources = config.alpha_source_ids();
    let results: Vec<_> = config
        .alpha_inputs
        .par_iter()
        .zip(sources.par_iter())
        .map(|(input, source)| {
            let path = &input.csv_path;
            let file = fs::File::open(path)
                .map_err(|e| MigrationError::at(Stage::Alpha, Some(path), None, e.to_string()))?;
            let mapping = AlphaMapping { title_column: input.title_column.clone(), area_column: input.area_column.clone() };
            load_alpha_csv(std::io::BufReader::new(file), source, &mapping).map_err(|e| {
                let line = match &e {
                    IntegrationError::CsvSyntax { line, .. } => Some(*line as usize),
                    _ => None,
                };
                MigrationError::at(Stage::Alpha, Some(path), line, e.to_string())
            })
        })
        .collect();
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    report.alpha_rows_read = out.len();
    Ok(out)
}

/// Narrowest column type holding every value seen for one attribute.
fn infer_type<'a>(values: impl Iterator<Item = &'a AttrValue>) -> ColumnType {
    let (mut ints, mut reals, mut width) = (true, true, 1usize);
    for v in values {
        match v {
            AttrValue::Null => {}
            AttrValue::Int(_) => {}
            AttrValue::Real(_) => ints = false,
            other => {
                ints = false;
                reals = false;
                width = width.max(other.to_text().chars().count());
            }
        }
    }
    if ints {
        ColumnType::Integer
    } else if reals {
        ColumnType::Float
    } else {
        ColumnType::Char(width.min(u16::MAX as usize) as u16)
    }
}

const PROVENANCE_COLUMNS: [&str; 2] = ["src_graphic", "src_alpha"];

fn load_stage(
    config: &MigrationConfig,
    target: &Crs,
    parcels: &[crate::integration::MergedParcel],
) -> Result<Layer, MigrationError> {
    let fail = |m: String| MigrationError::at(Stage::Load, None, None, m);
    let mut names: BTreeMap<&str, Vec<&AttrValue>> = BTreeMap::new();
    for p in parcels {
        for (k, v) in &p.attributes {
            names.entry(k.as_str()).or_default().push(v);
        }
    }
    let mut schema = Vec::with_capacity(names.len() + 2);
    for (name, values) in &names {
        if !is_identifier(name) || PROVENANCE_COLUMNS.iter().any(|c| c.eq_ignore_ascii_case(name)) {
            return Err(fail(format!("attribute name {name:?} cannot be used as a column name")));
        }
        schema.push(ColumnDef::new(*name, infer_type(values.iter().copied())));
    }
    let widest = |f: &dyn Fn(&crate::integration::MergedParcel) -> String| {
        parcels.iter().map(|p| f(p).chars().count()).max().unwrap_or(1).clamp(1, u16::MAX as usize) as u16
    };
    schema.push(ColumnDef::new(PROVENANCE_COLUMNS[0], ColumnType::Char(widest(&|p| p.provenance.graphic.to_string()))));
    schema.push(ColumnDef::new(PROVENANCE_COLUMNS[1], ColumnType::Char(widest(&|p| p.provenance.alpha.to_string()))));

    let attr_columns = schema[..names.len()].to_vec();
    let features = parcels.iter().map(|p| {
        let mut attrs: Vec<AttrValue> = attr_columns
            .iter()
            .map(|c| match (c.ctype, p.attributes.get(&c.name)) {
                (_, None) => AttrValue::Null,
                (ColumnType::Float, Some(AttrValue::Int(i))) => AttrValue::Real(*i as f64),
                (ColumnType::Char(_), Some(v @ (AttrValue::Int(_) | AttrValue::Real(_)))) => {
                    AttrValue::Text(v.to_text())
                }
                (_, Some(v)) => v.clone(),
            })
            .collect();
        attrs.push(AttrValue::Text(p.provenance.graphic.to_string()));
        attrs.push(AttrValue::Text(p.provenance.alpha.to_string()));
        (canonical_key(&p.key), p.geometry.clone(), attrs)
    });
    Layer::from_features(&config.layer_name, *target, schema, features).map_err(|e| fail(e.to_string()))
}

/// Removes a directory on drop unless disarmed.
struct TempDir(Option<PathBuf>);

impl Drop for TempDir {
    fn drop(&mut self) {
        if let Some(p) = self.0.take() {
            let _ = fs::remove_dir_all(p);
        }
    }
}

fn save_stage(config: &MigrationConfig, layer: Layer, run: &mut Run<'_>) -> Result<(), MigrationError> {
    let store = &config.store_path;
    let fail = |file: &Path, m: String| MigrationError::at(Stage::Save, Some(file), None, m);
    let mut catalog = if store.join(store::CATALOG_FILE).exists() {
        store::load(store).map_err(|e| fail(store, e.to_string()))?
    } else {
        Catalog::new()
    };
    catalog.insert_layer(layer);

    let parent = match store.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = store.file_name().ok_or_else(|| fail(store, "store path has no directory name".into()))?;
    let name = name.to_string_lossy();
    fs::create_dir_all(&parent).map_err(|e| fail(&parent, e.to_string()))?;
    let tmp = parent.join(format!(".{name}.tmp-{}", std::process::id()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(|e| fail(&tmp, e.to_string()))?;
    }
    let mut guard = TempDir(Some(tmp.clone()));
    store::save(&catalog, &tmp).map_err(|e| fail(&tmp, e.to_string()))?;
    run.checkpoint(Stage::Save)?;

    if store.exists() {
        let old = parent.join(format!(".{name}.old-{}", std::process::id()));
        fs::rename(store, &old).map_err(|e| fail(store, e.to_string()))?;
        if let Err(e) = fs::rename(&tmp, store) {
            let _ = fs::rename(&old, store);
            return Err(fail(store, e.to_string()));
        }
        let _ = fs::remove_dir_all(&old);
    } else {
        fs::rename(&tmp, store).map_err(|e| fail(store, e.to_string()))?;
    }
    guard.0 = None;
    Ok(())
}

fn write_reports(dir: &Path, report: &MigrationReport) -> Result<(), MigrationError> {
    let fail = |p: &Path, e: std::io::Error| MigrationError::at(Stage::Save, Some(p), None, e.to_string());
    fs::create_dir_all(dir).map_err(|e| fail(dir, e))?;
    for (file, body) in
        [("report.txt", report.to_text()), ("report.jsonl", report.to_jsonl()), ("anomalies.csv", report.anomalies_csv())]
    {
        let path = dir.join(file);
        fs::write(&path, body).map_err(|e| fail(&path, e))?;
    }
    Ok(())
}
