use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::manifest::SkippedRow;
use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Detection,
    Corruption,
    Attribution,
}

/// Polarity conventions, printed in every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub detection_positive: String,
    pub attribution_positive: String,
    pub ties: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            detection_positive: "real images; higher score means more likely real".into(),
            attribution_positive: "belonging images; scored by negated HFI".into(),
            ties: "AUROC gives tied pairs half credit; AUPR processes equal scores as one threshold group"
                .into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ImageCounts {
    pub total: usize,
    pub scored: usize,
    pub skipped: Vec<SkippedRow>,
}

/// One `(scorer config, reconstructor, task)` metric pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub config: String,
    pub reconstructor: String,
    pub task: String,
    pub auroc: f64,
    pub aupr: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

/// Mean rank of a scorer config among all configs, per reconstructor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub reconstructor: String,
    pub config: String,
    pub auroc_rank: f64,
    pub aupr_rank: f64,
    pub tasks: usize,
}

/// One point of a corruption curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub corruption: String,
    pub parameter: f64,
    pub config: String,
    pub reconstructor: String,
    pub task: String,
    pub auroc: f64,
    pub aupr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub config: String,
    pub reconstructor: String,
    pub population: String,
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Wall-clock measurements; excluded from [`EvalReport::body_digest`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub samples: usize,
    pub total_seconds: f64,
    pub seconds_per_sample: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub task_id: String,
    pub kind: TaskKind,
    pub conventions: Conventions,
    pub jpeg_codec: String,
    pub configs: Vec<String>,
    pub reconstructors: Vec<String>,
    pub images: ImageCounts,
    pub metrics: Vec<MetricRow>,
    pub ranks: Vec<RankRow>,
    pub curves: Vec<CurvePoint>,
    pub histograms: Vec<HistogramRow>,
    pub timing: Timing,
}

impl EvalReport {
    pub fn new(task_id: impl Into<String>, kind: TaskKind) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            task_id: task_id.into(),
            kind,
            conventions: Conventions::default(),
            jpeg_codec: crate::imaging::JPEG_CODEC.into(),
            configs: Vec::new(),
            reconstructors: Vec::new(),
            images: ImageCounts::default(),
            metrics: Vec::new(),
            ranks: Vec::new(),
            curves: Vec::new(),
            histograms: Vec::new(),
            timing: Timing::default(),
        }
    }

    /// Finds a metric row.
    pub fn metric(&self, config: &str, reconstructor: &str, task: &str) -> Option<&MetricRow> {
        self.metrics
            .iter()
            .find(|m| m.config == config && m.reconstructor == reconstructor && m.task == task)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// SHA-256 of the JSON body with timing removed; equal for reruns on the
    /// same inputs.
    pub fn body_digest(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(obj) = value.as_object_mut() {
            obj.remove("timing");
        }
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(&value)?)))
    }

    /// Writes `report.json` plus flat CSV tables into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json_path = dir.join("report.json");
        std::fs::write(&json_path, self.to_json()? + "\n").map_err(|e| Error::io(&json_path, e))?;
        write_csv(&dir.join("metrics.csv"), &self.metrics)?;
        if !self.ranks.is_empty() {
            write_csv(&dir.join("ranks.csv"), &self.ranks)?;
        }
        if !self.curves.is_empty() {
            write_csv(&dir.join("curves.csv"), &self.curves)?;
        }
        Ok(())
    }

    /// Human-readable metric table.
    pub fn write_summary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "task {} ({:?})", self.task_id, self.kind)?;
        writeln!(out, "positive class: {}", match self.kind {
            TaskKind::Attribution => &self.conventions.attribution_positive,
            _ => &self.conventions.detection_positive,
        })?;
        for m in &self.metrics {
            writeln!(
                out,
                "{:<48} {:<20} {:<28} AUROC {:.4}  AUPR {:.4}",
                m.config, m.reconstructor, m.task, m.auroc, m.aupr
            )?;
        }
        for c in &self.curves {
            writeln!(
                out,
                "{:<14} {:<48} {:<20} {:<28} AUROC {:.4}  AUPR {:.4}",
                c.corruption, c.config, c.reconstructor, c.task, c.auroc, c.aupr
            )?;
        }
        if !self.images.skipped.is_empty() {
            writeln!(out, "skipped {} of {} images", self.images.skipped.len(), self.images.total)?;
        }
        Ok(())
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
