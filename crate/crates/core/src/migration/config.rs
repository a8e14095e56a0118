use super::MigrationError;
use crate::integration::MergePolicy;
use crate::projection::{Crs, ZoneRegistry};
use crate::schema::is_identifier;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

/// MID column holding the raw title, by 0-based position or by name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphicInput {
    pub mif_path: PathBuf,
    #[serde(default)]
    pub mid_path: Option<PathBuf>,
    pub title_column: ColumnRef,
    /// Defaults to the MIF file stem.
    #[serde(default)]
    pub source_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaInput {
    pub csv_path: PathBuf,
    pub title_column: String,
    #[serde(default)]
    pub area_column: Option<String>,
    /// Defaults to the CSV file stem.
    #[serde(default)]
    pub source_id: Option<String>,
}

/// Either a named zone from the shipped registry or explicit parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetCrs {
    Zone { zone: String },
    Crs(Crs),
}

impl TargetCrs {
    pub fn resolve(&self) -> Result<Crs, MigrationError> {
        match self {
            TargetCrs::Crs(c) => Ok(*c),
            TargetCrs::Zone { zone } => ZoneRegistry::builtin()
                .zone(zone)
                .map(Crs::Lcc)
                .ok_or_else(|| MigrationError::Config(format!("unknown zone {zone:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MigrationConfig {
    pub inputs: Vec<GraphicInput>,
    #[serde(default)]
    pub alpha_inputs: Vec<AlphaInput>,
    pub target_crs: TargetCrs,
    #[serde(default)]
    pub policy: MergePolicy,
    pub store_path: PathBuf,
    pub layer_name: String,
    /// Directory receiving report.txt, report.jsonl and anomalies.csv.
    #[serde(default)]
    pub report_path: Option<PathBuf>,
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

impl MigrationConfig {
    /// Reads a JSON config; relative paths are taken relative to its directory.
    pub fn from_file(path: &Path) -> Result<Self, MigrationError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MigrationError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    pub fn from_json(text: &str) -> Result<Self, MigrationError> {
        let config: MigrationConfig = serde_json::from_str(text)
            .map_err(|e| MigrationError::Config(format!("line {}: {e}", e.line())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for i in &mut self.inputs {
            fix(&mut i.mif_path);
            if let Some(m) = &mut i.mid_path {
                fix(m);
            }
        }
        for a in &mut self.alpha_inputs {
            fix(&mut a.csv_path);
        }
        fix(&mut self.store_path);
        if let Some(r) = &mut self.report_path {
            fix(r);
        }
    }

    pub fn validate(&self) -> Result<(), MigrationError> {
        if self.inputs.is_empty() {
            return Err(MigrationError::Config("at least one graphic input is required".into()));
        }
        if !is_identifier(&self.layer_name) {
            return Err(MigrationError::Config(format!("invalid layer name {:?}", self.layer_name)));
        }
        if !(self.policy.area_tolerance >= 0.0 && self.policy.area_tolerance.is_finite()) {
            return Err(MigrationError::Config("policy.area_tolerance must be a non-negative number".into()));
        }
        self.target_crs.resolve()?;
        let mut seen = BTreeSet::new();
        for id in self.graphic_source_ids().into_iter().chain(self.alpha_source_ids()) {
            if id.is_empty() || !seen.insert(id.clone()) {
                return Err(MigrationError::Config(format!("source id {id:?} is empty or used twice")));
            }
        }
        Ok(())
    }

    pub fn graphic_source_ids(&self) -> Vec<String> {
        self.inputs.iter().map(|i| i.source_id.clone().unwrap_or_else(|| stem(&i.mif_path))).collect()
    }

    pub fn alpha_source_ids(&self) -> Vec<String> {
        self.alpha_inputs.iter().map(|a| a.source_id.clone().unwrap_or_else(|| stem(&a.csv_path))).collect()
    }

    /// The policy actually applied: config input order as the default source
    /// priority, and the first configured area column as the area attribute.
    pub fn effective_policy(&self) -> MergePolicy {
        let mut policy = self.policy.clone();
        if policy.source_priority.is_empty() {
            policy.source_priority = self.graphic_source_ids().into_iter().chain(self.alpha_source_ids()).collect();
        }
        if policy.area_attribute.is_none() {
            policy.area_attribute = self.alpha_inputs.iter().find_map(|a| a.area_column.clone());
        }
        policy
    }
}
