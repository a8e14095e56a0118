//! Title-keyed merge of graphic records (geometry plus a raw title) with
//! alphanumeric records (attribute rows plus a raw title).
//!
//! Records are bucketed by the conservation-free core of their title.
//! A bucket with one graphic and one alphanumeric record becomes a parcel;
//! every other outcome is reported as an anomaly. Every input record ends up
//! in exactly one parcel's provenance or one disposition anomaly's refs.

mod alpha_csv;

pub use alpha_csv::{load_alpha_csv, AlphaMapping};

use crate::geometry::Geometry;
use crate::schema::AttrValue;
use crate::title::{canonical_key, parse_title, same_title, TitleKey, TitleMatch};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IntegrationError {
    #[error("CSV syntax error at line {line}: {message}")]
    CsvSyntax { line: u64, message: String },
    #[error("column {0:?} not found in CSV header")]
    MissingColumn(String),
    #[error("column {0:?} appears twice in CSV header")]
    DuplicateColumn(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphicRecord {
    pub source_id: String,
    pub feature_id: u64,
    pub raw_title: String,
    pub geometry: Geometry,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaRecord {
    pub source_id: String,
    pub row_id: u64,
    pub raw_title: String,
    pub attributes: BTreeMap<String, AttrValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Graphic,
    Alpha,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RecordRef {
    pub side: Side,
    pub source_id: String,
    pub record_id: u64,
}

impl RecordRef {
    pub fn graphic(r: &GraphicRecord) -> Self {
        RecordRef { side: Side::Graphic, source_id: r.source_id.clone(), record_id: r.feature_id }
    }

    pub fn alpha(r: &AlphaRecord) -> Self {
        RecordRef { side: Side::Alpha, source_id: r.source_id.clone(), record_id: r.row_id }
    }
}

impl fmt::Display for RecordRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = match self.side {
            Side::Graphic => "graphic",
            Side::Alpha => "alpha",
        };
        write!(f, "{side}:{}#{}", self.source_id, self.record_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub graphic: RecordRef,
    pub alpha: RecordRef,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergedParcel {
    pub key: TitleKey,
    pub geometry: Geometry,
    pub attributes: BTreeMap<String, AttrValue>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AnomalyKind {
    TitleParseFailure,
    OrphanGeometry,
    OrphanAttributes,
    DuplicateGeometry,
    DuplicateAttributes,
    ConservationConflict,
    AreaMismatch,
}

impl AnomalyKind {
    pub const ALL: [AnomalyKind; 7] = [
        AnomalyKind::TitleParseFailure,
        AnomalyKind::OrphanGeometry,
        AnomalyKind::OrphanAttributes,
        AnomalyKind::DuplicateGeometry,
        AnomalyKind::DuplicateAttributes,
        AnomalyKind::ConservationConflict,
        AnomalyKind::AreaMismatch,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AnomalyKind::TitleParseFailure => "TitleParseFailure",
            AnomalyKind::OrphanGeometry => "OrphanGeometry",
            AnomalyKind::OrphanAttributes => "OrphanAttributes",
            AnomalyKind::DuplicateGeometry => "DuplicateGeometry",
            AnomalyKind::DuplicateAttributes => "DuplicateAttributes",
            AnomalyKind::ConservationConflict => "ConservationConflict",
            AnomalyKind::AreaMismatch => "AreaMismatch",
        }
    }

    /// Whether this kind takes its records out of the merge. Conflicts and
    /// area mismatches annotate records that still became parcels.
    pub fn is_disposition(&self) -> bool {
        !matches!(self, AnomalyKind::ConservationConflict | AnomalyKind::AreaMismatch)
    }
}

impl fmt::Display for AnomalyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anomaly {
    pub kind: AnomalyKind,
    pub refs: Vec<RecordRef>,
    pub detail: String,
    pub raw_titles: Vec<String>,
    /// Core title key of the bucket, empty for unparseable titles.
    pub bucket: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuplicatePolicy {
    #[default]
    FirstWins,
    RejectBoth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConservationPolicy {
    #[default]
    PreferGraphic,
    PreferAlpha,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MergePolicy {
    pub duplicates: DuplicatePolicy,
    pub conservation: ConservationPolicy,
    /// Source ids from highest to lowest priority. Unlisted sources rank
    /// after listed ones, by source id.
    pub source_priority: Vec<String>,
    /// Alphanumeric attribute holding the declared area, in layer units squared.
    pub area_attribute: Option<String>,
    pub area_tolerance: f64,
}

impl Default for MergePolicy {
    fn default() -> Self {
        MergePolicy {
            duplicates: DuplicatePolicy::FirstWins,
            conservation: ConservationPolicy::PreferGraphic,
            source_priority: Vec::new(),
            area_attribute: None,
            area_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MergeOutcome {
    pub parcels: Vec<MergedParcel>,
    pub anomalies: Vec<Anomaly>,
}

impl MergeOutcome {
    pub fn count(&self, kind: AnomalyKind) -> usize {
        self.anomalies.iter().filter(|a| a.kind == kind).count()
    }

    /// Records accounted for: two per parcel plus every ref of a disposition anomaly.
    pub fn accounted_records(&self) -> usize {
        2 * self.parcels.len()
            + self.anomalies.iter().filter(|a| a.kind.is_disposition()).map(|a| a.refs.len()).sum::<usize>()
    }
}

struct Member<'a, R> {
    record: &'a R,
    key: TitleKey,
    rank: (usize, &'a str, u64, &'a str),
}

#[derive(Default)]
struct Bucket<'a> {
    graphics: Vec<Member<'a, GraphicRecord>>,
    alphas: Vec<Member<'a, AlphaRecord>>,
}

trait Record: Sync {
    fn source_id(&self) -> &str;
    fn record_id(&self) -> u64;
    fn raw_title(&self) -> &str;
    fn record_ref(&self) -> RecordRef;
}

impl Record for GraphicRecord {
    fn source_id(&self) -> &str {
        &self.source_id
    }
    fn record_id(&self) -> u64 {
        self.feature_id
    }
    fn raw_title(&self) -> &str {
        &self.raw_title
    }
    fn record_ref(&self) -> RecordRef {
        RecordRef::graphic(self)
    }
}

impl Record for AlphaRecord {
    fn source_id(&self) -> &str {
        &self.source_id
    }
    fn record_id(&self) -> u64 {
        self.row_id
    }
    fn raw_title(&self) -> &str {
        &self.raw_title
    }
    fn record_ref(&self) -> RecordRef {
        RecordRef::alpha(self)
    }
}

fn parse_side<'a, R: Record>(
    records: &'a [R],
    policy: &'a MergePolicy,
    anomalies: &mut Vec<Anomaly>,
) -> Vec<Member<'a, R>> {
    let parsed: Vec<_> = records.par_iter().map(|r| (r, parse_title(r.raw_title()))).collect();
    let mut members = Vec::with_capacity(parsed.len());
    for (record, result) in parsed {
        match result {
            Ok((key, _)) => {
                let priority = policy
                    .source_priority
                    .iter()
                    .position(|s| s == record.source_id())
                    .unwrap_or(policy.source_priority.len());
                let rank = (priority, record.source_id(), record.record_id(), record.raw_title());
                members.push(Member { record, key, rank });
            }
            Err(e) => anomalies.push(Anomaly {
                kind: AnomalyKind::TitleParseFailure,
                refs: vec![record.record_ref()],
                detail: e.to_string(),
                raw_titles: vec![record.raw_title().to_string()],
                bucket: String::new(),
            }),
        }
    }
    members
}

/// Picks the surviving member of one side of a bucket, reporting the others.
fn resolve<'a, R: Record>(
    mut members: Vec<Member<'a, R>>,
    kind: AnomalyKind,
    bucket: &str,
    policy: &MergePolicy,
    anomalies: &mut Vec<Anomaly>,
) -> Option<Member<'a, R>> {
    members.sort_by(|a, b| a.rank.cmp(&b.rank));
    if members.len() <= 1 {
        return members.pop();
    }
    match policy.duplicates {
        DuplicatePolicy::FirstWins => {
            let mut iter = members.into_iter();
            let winner = iter.next().expect("at least two members");
            for loser in iter {
                anomalies.push(Anomaly {
                    kind,
                    refs: vec![loser.record.record_ref()],
                    detail: format!("superseded by {}", winner.record.record_ref()),
                    raw_titles: vec![loser.record.raw_title().to_string()],
                    bucket: bucket.to_string(),
                });
            }
            Some(winner)
        }
        DuplicatePolicy::RejectBoth => {
            anomalies.push(Anomaly {
                kind,
                refs: members.iter().map(|m| m.record.record_ref()).collect(),
                detail: format!("{} records share this title; all rejected", members.len()),
                raw_titles: members.iter().map(|m| m.record.raw_title().to_string()).collect(),
                bucket: bucket.to_string(),
            });
            None
        }
    }
}

fn orphan<R: Record>(member: &Member<'_, R>, kind: AnomalyKind, bucket: &str) -> Anomaly {
    let other = match kind {
        AnomalyKind::OrphanGeometry => "alphanumeric",
        _ => "graphic",
    };
    Anomaly {
        kind,
        refs: vec![member.record.record_ref()],
        detail: format!("no {other} record for this title"),
        raw_titles: vec![member.record.raw_title().to_string()],
        bucket: bucket.to_string(),
    }
}

pub fn merge_sources(graphics: &[GraphicRecord], alphas: &[AlphaRecord], policy: &MergePolicy) -> MergeOutcome {
    let mut anomalies = Vec::new();
    let mut buckets: BTreeMap<String, Bucket<'_>> = BTreeMap::new();
    for m in parse_side(graphics, policy, &mut anomalies) {
        buckets.entry(m.key.core_key()).or_default().graphics.push(m);
    }
    for m in parse_side(alphas, policy, &mut anomalies) {
        buckets.entry(m.key.core_key()).or_default().alphas.push(m);
    }

    let mut parcels = Vec::new();
    for (core, bucket) in buckets {
        // one-sided buckets have nothing to compete for: every member is an orphan
        if bucket.alphas.is_empty() || bucket.graphics.is_empty() {
            anomalies.extend(bucket.graphics.iter().map(|m| orphan(m, AnomalyKind::OrphanGeometry, &core)));
            anomalies.extend(bucket.alphas.iter().map(|m| orphan(m, AnomalyKind::OrphanAttributes, &core)));
            continue;
        }
        let g = resolve(bucket.graphics, AnomalyKind::DuplicateGeometry, &core, policy, &mut anomalies);
        let a = resolve(bucket.alphas, AnomalyKind::DuplicateAttributes, &core, policy, &mut anomalies);
        let (g, a) = match (g, a) {
            (Some(g), Some(a)) => (g, a),
            (Some(g), None) => {
                anomalies.push(orphan(&g, AnomalyKind::OrphanGeometry, &core));
                continue;
            }
            (None, Some(a)) => {
                anomalies.push(orphan(&a, AnomalyKind::OrphanAttributes, &core));
                continue;
            }
            (None, None) => continue,
        };
        let refs = vec![g.record.record_ref(), a.record.record_ref()];
        let raw_titles = vec![g.record.raw_title.clone(), a.record.raw_title.clone()];
        let key = match same_title(&g.key, &a.key) {
            TitleMatch::Conflict => {
                let (kept, code) = match policy.conservation {
                    ConservationPolicy::PreferGraphic => ("graphic", &g.key),
                    ConservationPolicy::PreferAlpha => ("alpha", &a.key),
                };
                anomalies.push(Anomaly {
                    kind: AnomalyKind::ConservationConflict,
                    refs: refs.clone(),
                    detail: format!(
                        "conservation {} vs {}; kept {kept} code",
                        g.key.conservation().unwrap_or("?"),
                        a.key.conservation().unwrap_or("?")
                    ),
                    raw_titles: raw_titles.clone(),
                    bucket: core.clone(),
                });
                code.clone()
            }
            _ => {
                let conservation = g.key.conservation().or(a.key.conservation());
                g.key.with_conservation(conservation)
            }
        };
        if let Some(declared) =
            policy.area_attribute.as_ref().and_then(|name| a.record.attributes.get(name)).and_then(AttrValue::as_f64)
        {
            let computed = g.record.geometry.area();
            if (declared - computed).abs() > policy.area_tolerance * computed {
                anomalies.push(Anomaly {
                    kind: AnomalyKind::AreaMismatch,
                    refs: refs.clone(),
                    detail: format!("declared {declared} vs computed {computed:.3}"),
                    raw_titles,
                    bucket: core.clone(),
                });
            }
        }
        parcels.push(MergedParcel {
            key,
            geometry: g.record.geometry.clone(),
            attributes: a.record.attributes.clone(),
            provenance: Provenance { graphic: refs[0].clone(), alpha: refs[1].clone() },
        });
    }

    parcels.sort_by_cached_key(|p| canonical_key(&p.key));
    anomalies.sort_by(|x, y| (&x.bucket, x.kind, &x.refs).cmp(&(&y.bucket, y.kind, &y.refs)));
    MergeOutcome { parcels, anomalies }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Polygon, Region};

    fn graphic(src: &str, id: u64, title: &str) -> GraphicRecord {
        let x = id as f64 * 10.0;
        GraphicRecord {
            source_id: src.into(),
            feature_id: id,
            raw_title: title.into(),
            geometry: Geometry::from_region(Region::from(Polygon::rect(x, 0.0, x + 10.0, 10.0).unwrap())),
        }
    }

    fn alpha(src: &str, id: u64, title: &str) -> AlphaRecord {
        AlphaRecord { source_id: src.into(), row_id: id, raw_title: title.into(), attributes: BTreeMap::new() }
    }

    #[test]
    fn cross_format_merge() {
        let out = merge_sources(&[graphic("g", 1, "T1111/20")], &[alpha("a", 1, "03/T/1111/20")], &MergePolicy::default());
        assert!(out.anomalies.is_empty());
        assert_eq!(out.parcels.len(), 1);
        assert_eq!(out.parcels[0].key.conservation(), Some("03"));
        assert_eq!(canonical_key(&out.parcels[0].key), "03/T/1111/20");
    }

    #[test]
    fn graphic_only() {
        let out = merge_sources(&[graphic("g", 1, "T1111/20")], &[], &MergePolicy::default());
        assert!(out.parcels.is_empty());
        assert_eq!(out.anomalies.len(), 1);
        assert_eq!(out.anomalies[0].kind, AnomalyKind::OrphanGeometry);
    }

    #[test]
    fn reject_both_duplicates() {
        let policy = MergePolicy { duplicates: DuplicatePolicy::RejectBoth, ..MergePolicy::default() };
        let gs = [graphic("g", 1, "T1111/20"), graphic("g", 2, "T/1111/20")];
        let out = merge_sources(&gs, &[alpha("a", 1, "03/T/1111/20")], &policy);
        assert!(out.parcels.is_empty());
        assert_eq!(out.count(AnomalyKind::DuplicateGeometry), 1);
        assert_eq!(out.count(AnomalyKind::OrphanAttributes), 1);
        assert_eq!(out.anomalies.len(), 2);
        assert_eq!(out.accounted_records(), 3);
    }

    #[test]
    fn first_wins_by_priority() {
        let policy = MergePolicy { source_priority: vec!["late".into(), "early".into()], ..MergePolicy::default() };
        let gs = [graphic("early", 1, "T1111/20"), graphic("late", 2, "T1111/20")];
        let out = merge_sources(&gs, &[alpha("a", 1, "T1111/20")], &policy);
        assert_eq!(out.parcels.len(), 1);
        assert_eq!(out.parcels[0].provenance.graphic.source_id, "late");
        let dup = &out.anomalies[0];
        assert_eq!(dup.kind, AnomalyKind::DuplicateGeometry);
        assert_eq!(dup.refs[0].source_id, "early");
        assert_eq!(out.accounted_records(), 3);
    }

    #[test]
    fn conservation_conflict_and_area() {
        let mut a = alpha("a", 1, "04/T/1111/20");
        a.attributes.insert("surface".into(), AttrValue::Real(130.0));
        let policy = MergePolicy { area_attribute: Some("surface".into()), ..MergePolicy::default() };
        let out = merge_sources(&[graphic("g", 1, "03/T/1111/20")], &[a.clone()], &policy);
        assert_eq!(out.parcels.len(), 1);
        assert_eq!(out.parcels[0].key.conservation(), Some("03"));
        assert_eq!(out.count(AnomalyKind::ConservationConflict), 1);
        assert_eq!(out.count(AnomalyKind::AreaMismatch), 1);
        assert_eq!(out.accounted_records(), 2);

        let prefer_alpha = MergePolicy { conservation: ConservationPolicy::PreferAlpha, ..MergePolicy::default() };
        let out = merge_sources(&[graphic("g", 1, "03/T/1111/20")], &[a.clone()], &prefer_alpha);
        assert_eq!(out.parcels[0].key.conservation(), Some("04"));

        a.attributes.insert("surface".into(), AttrValue::Real(104.0));
        a.raw_title = "T1111/20".into();
        let out = merge_sources(&[graphic("g", 1, "03/T/1111/20")], &[a], &policy);
        assert!(out.anomalies.is_empty());
    }

    #[test]
    fn unparseable_titles() {
        let out = merge_sources(&[graphic("g", 1, "XYZ")], &[alpha("a", 1, "")], &MergePolicy::default());
        assert_eq!(out.count(AnomalyKind::TitleParseFailure), 2);
        assert_eq!(out.accounted_records(), 2);
    }
}
