use clap::{Parser, Subcommand, ValueEnum};
use parcel_forge::geometry::Envelope;
use parcel_forge::migration::{run_migration, validate, MigrationConfig, MigrationError};
use parcel_forge::store::{self, export_geojson, export_sql, feature_to_geojson, StoreError};
use parcel_forge::{canonical_key, format_title, parse_title, Crs, TitleError, TitleFormat};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;
use thiserror::Error;

#[derive(Parser, Debug)]
#[command(name = "parcel-forge", version, about = "Migrate, query and serve cadastral parcel stores")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run the full migration described by a JSON config and save the store
    Migrate {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Dry run of a migration: same report, nothing written
    Validate {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Print the canonical key of a title, or re-spell it in another format
    NormalizeTitle {
        raw: String,
        #[arg(long, value_enum)]
        to: Option<Format>,
    },
    /// Look up parcels by bounding box or title; prints GeoJSON in the layer CRS
    Query {
        #[arg(long, env = "PARCEL_FORGE_STORE", default_value = "store")]
        store: PathBuf,
        #[arg(long)]
        layer: String,
        /// minx,miny,maxx,maxy
        #[arg(long, value_parser = parse_bbox, conflicts_with = "title", required_unless_present = "title")]
        bbox: Option<Envelope>,
        #[arg(long)]
        title: Option<String>,
    },
    /// Write a layer as an SQL script or geographic GeoJSON
    Export {
        #[arg(long, env = "PARCEL_FORGE_STORE", default_value = "store")]
        store: PathBuf,
        #[arg(long)]
        layer: String,
        #[arg(long, value_enum)]
        format: ExportFormat,
        #[arg(short, long)]
        output: PathBuf,
        /// SRID for SQL geometries; 4326 by default for geographic layers
        #[arg(long)]
        srid: Option<i32>,
    },
    /// Serve a store read-only over HTTP
    Serve {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: String,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    F1,
    F2,
    F3,
}

impl From<Format> for TitleFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::F1 => TitleFormat::F1,
            Format::F2 => TitleFormat::F2,
            Format::F3 => TitleFormat::F3,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExportFormat {
    Sql,
    Geojson,
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Migration(#[from] MigrationError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Title(#[from] TitleError),
    #[error(transparent)]
    Service(#[from] parcel_forge_service::ServiceError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("layer {0:?} is not geographic; pass --srid")]
    SridRequired(String),
}

fn parse_bbox(s: &str) -> Result<Envelope, String> {
    let nums: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect::<Option<_>>()
        .ok_or("expected four finite numbers")?;
    match nums[..] {
        [a, b, c, d] => Envelope::try_new(a, b, c, d).map_err(|e| e.to_string()),
        _ => Err("expected minx,miny,maxx,maxy".into()),
    }
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Migrate { config } => {
            let report = run_migration(&MigrationConfig::from_file(&config)?)?;
            print!("{}", report.to_text());
        }
        Cmd::Validate { config } => {
            let report = validate(&MigrationConfig::from_file(&config)?)?;
            print!("{}", report.to_text());
        }
        Cmd::NormalizeTitle { raw, to } => {
            let (key, _) = parse_title(&raw)?;
            match to {
                Some(f) => println!("{}", format_title(&key, f.into())?),
                None => println!("{}", canonical_key(&key)),
            }
        }
        Cmd::Query { store, layer, bbox, title } => {
            let catalog = store::load(&store)?;
            let layer = catalog.layer(&layer)?;
            let ids = match (bbox, title) {
                (Some(env), _) => layer.bbox_query(&env),
                (None, Some(t)) => layer.find_title(&parse_title(&t)?.0),
                (None, None) => unreachable!("clap requires bbox or title"),
            };
            let features: Vec<_> =
                ids.iter().map(|id| feature_to_geojson(layer, id, layer.get(id).expect("queried id is stored"))).collect();
            println!("{}", json!({"type": "FeatureCollection", "features": features}));
        }
        Cmd::Export { store, layer, format, output, srid } => {
            let catalog = store::load(&store)?;
            let layer = catalog.layer(&layer)?;
            let text = match format {
                ExportFormat::Geojson => export_geojson(layer)?,
                ExportFormat::Sql => {
                    let srid = match (srid, layer.crs()) {
                        (Some(s), _) => s,
                        (None, Crs::Geographic) => 4326,
                        (None, _) => return Err(CliError::SridRequired(layer.name().to_string())),
                    };
                    export_sql(layer, srid)?
                }
            };
            std::fs::write(&output, text).map_err(|source| CliError::Io { path: output, source })?;
        }
        Cmd::Serve { store, listen } => {
            let rt = tokio::runtime::Runtime::new().map_err(|source| CliError::Io { path: store.clone(), source })?;
            rt.block_on(async {
                let catalog = std::sync::Arc::new(store::load(&store)?);
                let (listener, addr) = parcel_forge_service::bind(&listen).await?;
                eprintln!("serving {} on http://{addr}", store.display());
                parcel_forge_service::serve_on(listener, catalog).await?;
                Ok::<_, CliError>(())
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
