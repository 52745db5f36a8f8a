//! Scoring of model predictions, random baselines, difficulty curves and
//! dataset statistics.

mod baseline;
mod curves;
mod parse;
mod score;
mod stats;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qa::{GtBox, Task};

pub use baseline::{baseline_chance, baseline_frequency};
pub use curves::{difficulty_curves, write_curve_csv, Axis, CurveFilter, CurveRow};
pub use parse::{parse_boxes, parse_count, parse_mcq};
pub use score::{
    score, score_counting, score_detection, score_mcq, score_questions, CountingScore, DetectionScore, McqScore,
    QuestionScore, F1_IOU_THRESHOLD,
};
pub use stats::{dataset_stats, DatasetStats, PositionHistogram, HEATMAP_GRID};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("bin edges must be strictly increasing and at least two, got {0:?}")]
    InvalidBins(Vec<f64>),
    #[error("trials must be at least 1")]
    NoTrials,
}

/// What a model answered. Strings cover MCQ letters, free text and raw
/// model output; box lists are pre-parsed detections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Payload {
    Index(u64),
    Text(String),
    Boxes(Vec<GtBox>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub qid: String,
    /// `None` marks an explicit missing prediction (e.g. a request that
    /// failed permanently).
    pub answer: Option<Payload>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub answered: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub qid: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mcq: McqScore,
    pub counting: CountingScore,
    pub detection: DetectionScore,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub buckets: Vec<CurveRow>,
    pub coverage: BTreeMap<Task, Coverage>,
    /// Prediction qids with no matching question.
    pub unmatched_qids: Vec<String>,
    /// Records scored with a fallback or zeroed (unparseable, malformed
    /// boxes, duplicates).
    pub flagged: Vec<Flag>,
}

impl EvalReport {
    /// Aligned plain-text summary.
    pub fn to_table(&self) -> String {
        let cov = |t: Task| self.coverage.get(&t).cloned().unwrap_or_default();
        let mut rows = vec![
            ["task".to_string(), "n".into(), "answered".into(), "metric".into(), "value".into()],
            row("MCQ", cov(Task::Mcq), "ACC %", self.mcq.acc),
            row("Counting", cov(Task::Counting), "ACC %", self.counting.acc),
            row("", cov(Task::Counting), "MAE", self.counting.mae),
            row("Detection", cov(Task::Detection), "mIoU %", self.detection.miou),
            row("", cov(Task::Detection), "F1 %", self.detection.f1),
        ];
        for r in rows.iter_mut().skip(3).step_by(2).take(2) {
            r[1].clear();
            r[2].clear();
        }
        let widths: Vec<usize> = (0..5).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for r in &rows {
            let cells: Vec<String> = r.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        if !self.unmatched_qids.is_empty() {
            out.push_str(&format!("unmatched prediction qids: {}\n", self.unmatched_qids.len()));
        }
        if !self.flagged.is_empty() {
            out.push_str(&format!("flagged records: {}\n", self.flagged.len()));
        }
        out
    }
}

fn row(task: &str, c: Coverage, metric: &str, v: f64) -> [String; 5] {
    [task.into(), c.total.to_string(), c.answered.to_string(), metric.into(), format!("{v:.2}")]
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>, EvalError> {
    let path = path.as_ref();
    let p = path.display().to_string();
    let f = std::fs::File::open(path).map_err(|e| EvalError::Io { path: p.clone(), message: e.to_string() })?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| EvalError::Io { path: p.clone(), message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| EvalError::Parse { path: p.clone(), line: i + 1, message: e.to_string() })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_predictions(path: impl AsRef<Path>, preds: &[PredictionRecord]) -> Result<(), EvalError> {
    let path = path.as_ref();
    let io = |e: std::io::Error| EvalError::Io { path: path.display().to_string(), message: e.to_string() };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for p in preds {
        writeln!(f, "{}", crate::canonical::to_string(p)).map_err(io)?;
    }
    f.flush().map_err(io)
}
