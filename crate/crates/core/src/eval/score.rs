use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::parse::{parse_boxes, parse_count, parse_mcq};
use super::{Coverage, EvalReport, Flag, Payload, PredictionRecord};
use crate::geometry::iou;
use crate::qa::{GtBox, QuestionInstance, Task};

/// A match is a true positive only strictly above this IoU.
pub const F1_IOU_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct McqScore {
    pub n: usize,
    pub acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CountingScore {
    pub n: usize,
    pub acc: f64,
    pub mae: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionScore {
    pub n: usize,
    pub miou: f64,
    pub f1: f64,
}

/// Per-question outcome, all fractions in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuestionScore {
    pub task: Task,
    /// A prediction existed and parsed.
    pub answered: bool,
    /// MCQ/counting exact match, or detection mIoU.
    pub primary: f64,
    pub abs_err: f64,
    pub f1: f64,
    pub flag: Option<String>,
}

impl QuestionScore {
    fn new(task: Task) -> Self {
        QuestionScore { task, answered: false, primary: 0.0, abs_err: 0.0, f1: 0.0, flag: None }
    }
}

/// Greedy one-to-one matching within each view, highest IoU first. Returns
/// (mIoU over gt boxes, F1 at IoU > 0.5).
pub(crate) fn match_boxes(gt: &[GtBox], pred: &[GtBox]) -> (f64, f64) {
    if gt.is_empty() {
        let v = if pred.is_empty() { 1.0 } else { 0.0 };
        return (v, v);
    }
    let mut pairs = Vec::new();
    for (i, g) in gt.iter().enumerate() {
        for (j, p) in pred.iter().enumerate() {
            if g.view_id == p.view_id {
                let v = iou(&g.bbox, &p.bbox);
                if v > 0.0 {
                    pairs.push((v, i, j));
                }
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut gt_used = vec![false; gt.len()];
    let mut pred_used = vec![false; pred.len()];
    let (mut sum, mut tp) = (0.0, 0usize);
    for (v, i, j) in pairs {
        if gt_used[i] || pred_used[j] {
            continue;
        }
        gt_used[i] = true;
        pred_used[j] = true;
        sum += v;
        if v > F1_IOU_THRESHOLD {
            tp += 1;
        }
    }
    let miou = sum / gt.len() as f64;
    let f1 = if tp == 0 { 0.0 } else { 2.0 * tp as f64 / (gt.len() + pred.len()) as f64 };
    (miou, f1)
}

pub(crate) fn score_one(q: &QuestionInstance, pred: Option<&Payload>) -> QuestionScore {
    let mut s = QuestionScore::new(q.task);
    match q.task {
        Task::Mcq => {
            let opts = q.options.as_deref().unwrap_or(&[]);
            let idx = match pred {
                Some(Payload::Index(i)) => usize::try_from(*i).ok().filter(|&i| i < opts.len()),
                Some(Payload::Text(t)) => parse_mcq(t, opts),
                _ => None,
            };
            s.answered = idx.is_some();
            if pred.is_some() && idx.is_none() {
                s.flag = Some("unparseable option".into());
            }
            s.primary = f64::from(u8::from(idx.is_some() && idx == q.gt_index()));
        }
        Task::Counting => {
            let gt = q.gt_count().unwrap_or(0);
            let v = match pred {
                Some(Payload::Index(i)) => Some(*i),
                Some(Payload::Text(t)) => parse_count(t),
                _ => None,
            };
            s.answered = v.is_some();
            if pred.is_some() && v.is_none() {
                s.flag = Some("unparseable count, scored as 0".into());
            }
            s.primary = f64::from(u8::from(v == Some(gt)));
            s.abs_err = v.unwrap_or(0).abs_diff(gt) as f64;
        }
        Task::Detection => {
            let boxes = match pred {
                Some(Payload::Boxes(b)) => Some(b.clone()),
                Some(Payload::Text(t)) => parse_boxes(t, &q.view_ids),
                _ => None,
            };
            match boxes {
                None => {
                    if pred.is_some() {
                        s.flag = Some("unparseable boxes".into());
                    }
                }
                Some(b) if b.iter().any(|g| !g.bbox.is_valid()) => {
                    s.answered = true;
                    s.flag = Some("malformed box (min > max or non-finite), question scored 0".into());
                }
                Some(b) => {
                    s.answered = true;
                    let (m, f) = match_boxes(q.answer.boxes(), &b);
                    s.primary = m;
                    s.f1 = f;
                }
            }
        }
    }
    s
}

fn index(preds: &[PredictionRecord]) -> (HashMap<&str, Option<&Payload>>, Vec<Flag>) {
    let mut map = HashMap::new();
    let mut dup = Vec::new();
    for p in preds {
        if map.contains_key(p.qid.as_str()) {
            dup.push(Flag { qid: p.qid.clone(), reason: "duplicate prediction ignored".into() });
        } else {
            map.insert(p.qid.as_str(), p.answer.as_ref());
        }
    }
    (map, dup)
}

/// Scores every question in dataset order. Missing predictions score as
/// unanswered.
pub fn score_questions(dataset: &[QuestionInstance], preds: &[PredictionRecord]) -> Vec<QuestionScore> {
    let (map, _) = index(preds);
    dataset.par_iter().map(|q| score_one(q, map.get(q.qid.as_str()).copied().flatten())).collect()
}

fn mean(xs: impl Iterator<Item = f64>) -> (usize, f64) {
    let (n, s) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n, if n == 0 { 0.0 } else { s / n as f64 })
}

pub(crate) fn aggregate(scores: &[QuestionScore]) -> (McqScore, CountingScore, DetectionScore) {
    let of = |t: Task| scores.iter().filter(move |s| s.task == t);
    let (n, acc) = mean(of(Task::Mcq).map(|s| s.primary));
    let mcq = McqScore { n, acc: 100.0 * acc };
    let (n, acc) = mean(of(Task::Counting).map(|s| s.primary));
    let (_, mae) = mean(of(Task::Counting).map(|s| s.abs_err));
    let counting = CountingScore { n, acc: 100.0 * acc, mae };
    let (n, miou) = mean(of(Task::Detection).map(|s| s.primary));
    let (_, f1) = mean(of(Task::Detection).map(|s| s.f1));
    (mcq, counting, DetectionScore { n, miou: 100.0 * miou, f1: 100.0 * f1 })
}

pub fn score_mcq(dataset: &[QuestionInstance], preds: &[PredictionRecord]) -> f64 {
    aggregate(&score_questions(dataset, preds)).0.acc
}

pub fn score_counting(dataset: &[QuestionInstance], preds: &[PredictionRecord]) -> CountingScore {
    aggregate(&score_questions(dataset, preds)).1
}

pub fn score_detection(dataset: &[QuestionInstance], preds: &[PredictionRecord]) -> DetectionScore {
    aggregate(&score_questions(dataset, preds)).2
}

/// Full report over all three tasks, without difficulty buckets.
pub fn score(dataset: &[QuestionInstance], preds: &[PredictionRecord]) -> EvalReport {
    let (map, mut flagged) = index(preds);
    let scores: Vec<QuestionScore> =
        dataset.par_iter().map(|q| score_one(q, map.get(q.qid.as_str()).copied().flatten())).collect();
    let known: std::collections::HashSet<&str> = dataset.iter().map(|q| q.qid.as_str()).collect();
    let mut unmatched: Vec<String> =
        map.keys().filter(|k| !known.contains(*k)).map(|k| k.to_string()).collect();
    unmatched.sort();
    for (q, s) in dataset.iter().zip(&scores) {
        if let Some(r) = &s.flag {
            flagged.push(Flag { qid: q.qid.clone(), reason: r.clone() });
        }
    }
    report_from(&scores, unmatched, flagged)
}

pub(crate) fn report_from(scores: &[QuestionScore], unmatched_qids: Vec<String>, flagged: Vec<Flag>) -> EvalReport {
    let (mcq, counting, detection) = aggregate(scores);
    let mut coverage: BTreeMap<Task, Coverage> = BTreeMap::new();
    for s in scores {
        let c = coverage.entry(s.task).or_default();
        c.total += 1;
        c.answered += usize::from(s.answered);
    }
    EvalReport { mcq, counting, detection, buckets: vec![], coverage, unmatched_qids, flagged }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Bbox2;

    fn gb(v: &str, b: [f64; 4]) -> GtBox {
        GtBox { view_id: v.into(), bbox: Bbox2::from(b) }
    }

    #[test]
    fn iou_fixture() {
        let (m, f) = match_boxes(&[gb("v0", [0., 0., 2., 2.])], &[gb("v0", [1., 1., 3., 3.])]);
        assert!((m - 1.0 / 7.0).abs() < 1e-12);
        assert_eq!(f, 0.0);
        let (m, f) = match_boxes(&[gb("v0", [0., 0., 2., 2.])], &[gb("v1", [0., 0., 2., 2.])]);
        assert_eq!((m, f), (0.0, 0.0));
    }

    #[test]
    fn greedy_is_one_to_one() {
        let gt = [gb("v0", [0., 0., 10., 10.]), gb("v0", [20., 0., 30., 10.])];
        // both predictions overlap the first gt box best; only one may take it
        let pred = [gb("v0", [0., 0., 10., 10.]), gb("v0", [1., 0., 11., 10.])];
        let (m, f) = match_boxes(&gt, &pred);
        assert!((m - 0.5).abs() < 1e-12);
        assert!((f - 0.5).abs() < 1e-12);
    }

    #[test]
    fn f1_threshold_is_strict() {
        // pred [0,0,1,w] against gt [0,0,1,1] has IoU 1/w
        let gt = [gb("v0", [0., 0., 1., 1.])];
        let (_, f) = match_boxes(&gt, &[gb("v0", [0., 0., 1., 2.])]);
        assert_eq!(f, 0.0);
        let (_, f) = match_boxes(&gt, &[gb("v0", [0., 0., 1., 1.999])]);
        assert_eq!(f, 1.0);
    }

    #[test]
    fn extra_predictions_lower_precision() {
        let gt = [gb("v0", [0., 0., 4., 4.])];
        let pred = [gb("v0", [0., 0., 4., 4.]), gb("v1", [0., 0., 4., 4.]), gb("v0", [8., 8., 9., 9.])];
        let (m, f) = match_boxes(&gt, &pred);
        assert_eq!(m, 1.0);
        assert!((f - 0.5).abs() < 1e-12);
    }
}
