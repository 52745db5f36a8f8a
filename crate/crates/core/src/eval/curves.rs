use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::score::QuestionScore;
use super::EvalError;
use crate::qa::{QuestionInstance, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Reasoning,
    Visibility,
}

impl Axis {
    pub fn value(self, q: &QuestionInstance) -> f64 {
        match self {
            Axis::Reasoning => q.reasoning_difficulty,
            Axis::Visibility => q.visibility_difficulty,
        }
    }

    /// Complementary-axis restriction used for the published curves:
    /// visibility below 0.5 when sweeping reasoning, reasoning below 6
    /// when sweeping visibility.
    pub fn default_filter(self) -> CurveFilter {
        match self {
            Axis::Reasoning => CurveFilter { max_visibility: Some(0.5), ..CurveFilter::default() },
            Axis::Visibility => CurveFilter { max_reasoning: Some(6.0), ..CurveFilter::default() },
        }
    }

    pub fn default_edges(self) -> Vec<f64> {
        match self {
            Axis::Reasoning => (0..=8).map(|i| i as f64).collect(),
            Axis::Visibility => (0..=10).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "reasoning" => Ok(Axis::Reasoning),
            "visibility" => Ok(Axis::Visibility),
            _ => Err(format!("unknown axis `{s}` (reasoning|visibility)")),
        }
    }
}

/// Strict upper bounds on either difficulty; `None` disables the bound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveFilter {
    pub max_reasoning: Option<f64>,
    pub max_visibility: Option<f64>,
}

impl CurveFilter {
    pub fn admits(&self, q: &QuestionInstance) -> bool {
        self.max_reasoning.map_or(true, |m| q.reasoning_difficulty < m)
            && self.max_visibility.map_or(true, |m| q.visibility_difficulty < m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub axis: Axis,
    pub task: Task,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: usize,
    /// Mean primary metric in percent (ACC, or mIoU for detection);
    /// `None` for an empty bin.
    pub metric: Option<f64>,
}

/// Bin index for `x`. Bins are `[e_i, e_{i+1})`; the first bin also takes
/// everything below `e_0` and the last everything from `e_{n-1}` up, so the
/// bins always partition the input.
fn bin_of(edges: &[f64], x: f64) -> usize {
    let last = edges.len() - 2;
    edges[1..=last].iter().take_while(|&&e| e <= x).count()
}

/// Metric per difficulty bin and task over the questions passing `filter`.
/// `scores` runs parallel to `dataset`.
pub fn difficulty_curves(
    dataset: &[QuestionInstance],
    scores: &[QuestionScore],
    axis: Axis,
    edges: &[f64],
    filter: &CurveFilter,
) -> Result<Vec<CurveRow>, EvalError> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(EvalError::InvalidBins(edges.to_vec()));
    }
    let nb = edges.len() - 1;
    let mut out = Vec::new();
    for task in Task::ALL {
        let mut count = vec![0usize; nb];
        let mut sum = vec![0.0; nb];
        for (q, s) in dataset.iter().zip(scores) {
            if q.task != task || !filter.admits(q) {
                continue;
            }
            let b = bin_of(edges, axis.value(q));
            count[b] += 1;
            sum[b] += s.primary;
        }
        if count.iter().all(|&c| c == 0) {
            continue;
        }
        for b in 0..nb {
            out.push(CurveRow {
                axis,
                task,
                bin_lo: edges[b],
                bin_hi: edges[b + 1],
                count: count[b],
                metric: (count[b] > 0).then(|| 100.0 * sum[b] / count[b] as f64),
            });
        }
    }
    Ok(out)
}

pub fn write_curve_csv(path: impl AsRef<Path>, rows: &[CurveRow]) -> Result<(), EvalError> {
    let path = path.as_ref();
    let io = |e: std::io::Error| EvalError::Io { path: path.display().to_string(), message: e.to_string() };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(f, "axis,task,bin_lo,bin_hi,count,metric").map_err(io)?;
    for r in rows {
        let m = r.metric.map_or_else(String::new, |m| format!("{m:.4}"));
        writeln!(f, "{:?},{:?},{},{},{},{m}", r.axis, r.task, r.bin_lo, r.bin_hi, r.count).map_err(io)?;
    }
    f.flush().map_err(io)
}
