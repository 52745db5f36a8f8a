use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::qa::{QuestionInstance, Task};

pub const HEATMAP_GRID: usize = 32;

/// Correct-option positions. `expected[j]` is the mean over questions of
/// `[j < k] / k`, the frequency a position-blind generator would produce
/// given the split's mix of option counts `k`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PositionHistogram {
    pub counts: Vec<usize>,
    pub percent: Vec<f64>,
    pub expected_percent: Vec<f64>,
    /// Largest |percent - expected_percent| in percentage points.
    pub max_deviation: f64,
    /// Counts per option count.
    pub by_option_count: BTreeMap<usize, Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub questions: BTreeMap<Task, usize>,
    pub templates: BTreeMap<String, usize>,
    /// MCQ correct option text.
    pub mcq_answers: BTreeMap<String, usize>,
    pub mcq_positions: PositionHistogram,
    pub counting_answers: BTreeMap<u64, usize>,
    /// Number of gt boxes per detection question.
    pub detection_boxes: BTreeMap<usize, usize>,
    /// Row-major 32×32 grid of gt box pixel mass in normalized image
    /// coordinates; sums to 1 when any box exists.
    pub detection_heatmap: Vec<Vec<f64>>,
    /// Lowercased word counts over question texts.
    pub vocabulary: BTreeMap<String, usize>,
}

fn overlap(lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    (hi.min(b) - lo.max(a)).max(0.0)
}

pub fn dataset_stats(dataset: &[QuestionInstance]) -> DatasetStats {
    let mut s = DatasetStats::default();
    let mut heat = vec![vec![0.0; HEATMAP_GRID]; HEATMAP_GRID];
    let mut expected: Vec<f64> = Vec::new();
    let mut n_mcq = 0usize;
    for q in dataset {
        *s.questions.entry(q.task).or_default() += 1;
        *s.templates.entry(q.template_id.clone()).or_default() += 1;
        for w in q.text.split(|c: char| !c.is_alphanumeric() && c != '-').filter(|w| !w.is_empty()) {
            *s.vocabulary.entry(w.to_lowercase()).or_default() += 1;
        }
        match q.task {
            Task::Mcq => {
                let Some(i) = q.gt_index() else { continue };
                let k = q.option_count();
                n_mcq += 1;
                if let Some(t) = q.options.as_ref().and_then(|o| o.get(i)) {
                    *s.mcq_answers.entry(t.clone()).or_default() += 1;
                }
                let h = &mut s.mcq_positions;
                if h.counts.len() < k.max(i + 1) {
                    h.counts.resize(k.max(i + 1), 0);
                    expected.resize(k.max(i + 1), 0.0);
                }
                h.counts[i] += 1;
                for e in expected.iter_mut().take(k) {
                    *e += 1.0 / k as f64;
                }
                let g = h.by_option_count.entry(k).or_insert_with(|| vec![0; k]);
                if i < g.len() {
                    g[i] += 1;
                }
            }
            Task::Counting => {
                if let Some(c) = q.gt_count() {
                    *s.counting_answers.entry(c).or_default() += 1;
                }
            }
            Task::Detection => {
                let boxes = q.answer.boxes();
                *s.detection_boxes.entry(boxes.len()).or_default() += 1;
                let [w, h] = q.image_size;
                let (cw, ch) = (w as f64 / HEATMAP_GRID as f64, h as f64 / HEATMAP_GRID as f64);
                for g in boxes {
                    let b = g.bbox;
                    for (r, row) in heat.iter_mut().enumerate() {
                        let oy = overlap(b.y_min, b.y_max, r as f64 * ch, (r + 1) as f64 * ch);
                        if oy == 0.0 {
                            continue;
                        }
                        for (c, cell) in row.iter_mut().enumerate() {
                            *cell += oy * overlap(b.x_min, b.x_max, c as f64 * cw, (c + 1) as f64 * cw);
                        }
                    }
                }
            }
        }
    }
    let total: f64 = heat.iter().flatten().sum();
    if total > 0.0 {
        heat.iter_mut().flatten().for_each(|v| *v /= total);
        s.detection_heatmap = heat;
    }
    let h = &mut s.mcq_positions;
    if n_mcq > 0 {
        h.percent = h.counts.iter().map(|&c| 100.0 * c as f64 / n_mcq as f64).collect();
        h.expected_percent = expected.iter().map(|e| 100.0 * e / n_mcq as f64).collect();
        h.max_deviation =
            h.percent.iter().zip(&h.expected_percent).map(|(p, e)| (p - e).abs()).fold(0.0, f64::max);
    }
    s
}
