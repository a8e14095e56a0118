use super::Stage;
use crate::integration::{Anomaly, AnomalyKind};
use crate::title::TitleFormat;
use serde::Serialize;
use serde_json::json;
use std::collections::BTreeMap;
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: Stage,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MigrationReport {
    /// Features in all MIF files, any geometry kind.
    pub features_read: usize,
    pub mid_rows_read: usize,
    /// Features left out of the merge because they are not regions.
    pub non_region_skipped: usize,
    /// Parseable graphic titles by the format they were written in.
    pub titles_by_format: BTreeMap<TitleFormat, usize>,
    pub alpha_rows_read: usize,
    /// Region features converted from a different source CRS.
    pub reprojected: usize,
    pub parcels_written: usize,
    pub anomalies_by_kind: BTreeMap<AnomalyKind, usize>,
    /// Records named by anomalies that kept them out of a parcel.
    pub unmatched_records: usize,
    pub anomalies: Vec<Anomaly>,
    pub duration_seconds: f64,
    pub stage_timings: Vec<StageTiming>,
}

impl MigrationReport {
    pub fn anomaly_count(&self, kind: AnomalyKind) -> usize {
        self.anomalies_by_kind.get(&kind).copied().unwrap_or(0)
    }

    pub fn title_count(&self, format: TitleFormat) -> usize {
        self.titles_by_format.get(&format).copied().unwrap_or(0)
    }

    /// Records that entered the merge.
    pub fn records_in(&self) -> usize {
        self.features_read - self.non_region_skipped + self.alpha_rows_read
    }

    /// Every merged record is in a parcel or in exactly one disposition anomaly.
    pub fn records_balance(&self) -> bool {
        2 * self.parcels_written + self.unmatched_records == self.records_in()
    }

    fn counts_json(&self) -> serde_json::Value {
        let titles: serde_json::Map<_, _> =
            TitleFormat::ALL.iter().map(|f| (f.as_str().to_string(), json!(self.title_count(*f)))).collect();
        let anomalies: serde_json::Map<_, _> =
            AnomalyKind::ALL.iter().map(|k| (k.as_str().to_string(), json!(self.anomaly_count(*k)))).collect();
        json!({
            "record": "summary",
            "features_read": self.features_read,
            "mid_rows_read": self.mid_rows_read,
            "non_region_skipped": self.non_region_skipped,
            "titles_by_format": titles,
            "alpha_rows_read": self.alpha_rows_read,
            "reprojected": self.reprojected,
            "parcels_written": self.parcels_written,
            "anomalies_by_kind": anomalies,
            "unmatched_records": self.unmatched_records,
        })
    }

    /// One JSON object per line: the summary, each anomaly, then timing
    /// lines (`"record":"stage"` and `"record":"duration"`).
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut line = |v: serde_json::Value| {
            out.push_str(&v.to_string());
            out.push('\n');
        };
        line(self.counts_json());
        for a in &self.anomalies {
            line(json!({
                "record": "anomaly",
                "kind": a.kind,
                "bucket": a.bucket,
                "refs": a.refs.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "detail": a.detail,
                "raw_titles": a.raw_titles,
            }));
        }
        for t in &self.stage_timings {
            line(json!({"record": "stage", "stage": t.stage, "seconds": t.seconds}));
        }
        line(json!({"record": "duration", "seconds": self.duration_seconds}));
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Migration report");
        let _ = writeln!(s, "  features read        {}", self.features_read);
        let _ = writeln!(s, "  MID rows read        {}", self.mid_rows_read);
        let _ = writeln!(s, "  non-region skipped   {}", self.non_region_skipped);
        for f in TitleFormat::ALL {
            let _ = writeln!(s, "  titles {}            {}", f, self.title_count(f));
        }
        let _ = writeln!(s, "  alpha rows read      {}", self.alpha_rows_read);
        let _ = writeln!(s, "  reprojected          {}", self.reprojected);
        let _ = writeln!(s, "  parcels written      {}", self.parcels_written);
        let _ = writeln!(s, "Anomalies");
        for k in AnomalyKind::ALL {
            let _ = writeln!(s, "  {:<22} {}", k.as_str(), self.anomaly_count(k));
        }
        let _ = writeln!(s, "Timings");
        for t in &self.stage_timings {
            let _ = writeln!(s, "  {:<10} {:.3} s", t.stage.as_str(), t.seconds);
        }
        let _ = writeln!(s, "  total      {:.3} s", self.duration_seconds);
        s
    }

    /// Correction file: kind, refs, detail, raw titles.
    pub fn anomalies_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["kind", "refs", "detail", "raw_titles"]).expect("in-memory write");
        for a in &self.anomalies {
            let refs = a.refs.iter().map(ToString::to_string).collect::<Vec<_>>().join(";");
            w.write_record([a.kind.as_str(), &refs, &a.detail, &a.raw_titles.join(" | ")]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
    }
}
