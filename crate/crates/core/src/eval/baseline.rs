use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use super::score::{match_boxes, report_from, QuestionScore};
use super::{EvalError, EvalReport};
use crate::geometry::Bbox2;
use crate::qa::{GtBox, QuestionInstance, Task};
use crate::seed_path;

/// Per-question answer sampler; each call yields one trial's prediction.
enum Guess {
    Index(usize),
    Count(u64),
    Boxes(Vec<GtBox>),
}

fn run<F>(dataset: &[QuestionInstance], seed: u64, tag: &str, trials: usize, sample: F) -> Result<EvalReport, EvalError>
where
    F: Fn(&QuestionInstance, &mut rand_chacha::ChaCha8Rng) -> Guess + Sync,
{
    if trials == 0 {
        return Err(EvalError::NoTrials);
    }
    let scores: Vec<QuestionScore> = dataset
        .par_iter()
        .map(|q| {
            let mut rng = crate::seed::rng(seed, seed_path![tag, q.qid.as_str()]);
            let (mut primary, mut abs_err, mut f1) = (0.0, 0.0, 0.0);
            for _ in 0..trials {
                match sample(q, &mut rng) {
                    Guess::Index(i) => primary += f64::from(u8::from(Some(i) == q.gt_index())),
                    Guess::Count(c) => {
                        let gt = q.gt_count().unwrap_or(0);
                        primary += f64::from(u8::from(c == gt));
                        abs_err += c.abs_diff(gt) as f64;
                    }
                    Guess::Boxes(b) => {
                        let (m, f) = match_boxes(q.answer.boxes(), &b);
                        primary += m;
                        f1 += f;
                    }
                }
            }
            let t = trials as f64;
            QuestionScore { task: q.task, answered: true, primary: primary / t, abs_err: abs_err / t, f1: f1 / t, flag: None }
        })
        .collect();
    Ok(report_from(&scores, vec![], vec![]))
}

fn uniform_box(rng: &mut impl Rng, w: f64, h: f64) -> Bbox2 {
    let (a, b) = (rng.gen_range(0.0..=w), rng.gen_range(0.0..=w));
    let (c, d) = (rng.gen_range(0.0..=h), rng.gen_range(0.0..=h));
    Bbox2::new(a.min(b), c.min(d), a.max(b), c.max(d))
}

/// Uniform guessing: a random option, a count uniform over the split's
/// observed range, and one uniformly random box in every cited view.
pub fn baseline_chance(dataset: &[QuestionInstance], seed: u64, trials: usize) -> Result<EvalReport, EvalError> {
    let counts: Vec<u64> = dataset.iter().filter_map(QuestionInstance::gt_count).collect();
    let lo = counts.iter().copied().min().unwrap_or(0);
    let hi = counts.iter().copied().max().unwrap_or(0);
    run(dataset, seed, "chance", trials, |q, rng| match q.task {
        Task::Mcq => Guess::Index(rng.gen_range(0..q.option_count().max(1))),
        Task::Counting => Guess::Count(rng.gen_range(lo..=hi)),
        Task::Detection => {
            let [w, h] = q.image_size;
            Guess::Boxes(
                q.view_ids
                    .iter()
                    .map(|v| GtBox { view_id: v.clone(), bbox: uniform_box(rng, w as f64, h as f64) })
                    .collect(),
            )
        }
    })
}

/// Guessing from the split's empirical answer distribution: the correct
/// position among questions with the same option count, a ground-truth
/// count, and in every cited view a ground-truth box drawn from the whole
/// split.
pub fn baseline_frequency(dataset: &[QuestionInstance], seed: u64, trials: usize) -> Result<EvalReport, EvalError> {
    let mut positions: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for q in dataset {
        if let Some(i) = q.gt_index() {
            positions.entry(q.option_count()).or_default().push(i);
        }
    }
    let counts: Vec<u64> = dataset.iter().filter_map(QuestionInstance::gt_count).collect();
    let boxes: Vec<Bbox2> = dataset.iter().flat_map(|q| q.answer.boxes().iter().map(|g| g.bbox)).collect();
    run(dataset, seed, "frequency", trials, |q, rng| match q.task {
        Task::Mcq => match positions.get(&q.option_count()) {
            Some(pool) => Guess::Index(pool[rng.gen_range(0..pool.len())]),
            None => Guess::Index(0),
        },
        Task::Counting => Guess::Count(counts[rng.gen_range(0..counts.len())]),
        Task::Detection if boxes.is_empty() => Guess::Boxes(vec![]),
        Task::Detection => Guess::Boxes(
            q.view_ids
                .iter()
                .map(|v| GtBox { view_id: v.clone(), bbox: boxes[rng.gen_range(0..boxes.len())] })
                .collect(),
        ),
    })
}
