use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::instantiate::{candidates, SceneContext};
use super::supervision::emit_supervision;
use super::{AnswerValue, QaError, QuestionInstance, QuestionTemplate, Task};
use crate::assets::AssetLibrary;
use crate::relations::{RelationGraphs, RelationParams};
use crate::render::SceneMetadata;
use crate::scene::ResolvedScene;
use crate::seed;
use crate::seed_path;

fn default_per_scene() -> usize {
    24
}

fn default_max_count_fraction() -> f64 {
    0.4
}

fn default_reshuffles() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancePolicy {
    /// Largest share any single counting answer may take.
    #[serde(default = "default_max_count_fraction")]
    pub max_count_fraction: f64,
    /// Seeded option reshuffles tried before the correct option is moved to
    /// the least-used position directly.
    #[serde(default = "default_reshuffles")]
    pub reshuffles: usize,
}

impl Default for BalancePolicy {
    fn default() -> Self {
        BalancePolicy { max_count_fraction: default_max_count_fraction(), reshuffles: default_reshuffles() }
    }
}

/// Upper bounds on the share of each task's questions per reasoning
/// difficulty bin. `edges` are interior bin edges; the outer bins are open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyQuota {
    pub edges: Vec<f64>,
    pub max_fraction: Vec<f64>,
}

impl DifficultyQuota {
    fn bin(&self, d: f64) -> usize {
        self.edges.iter().take_while(|&&e| d >= e).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Targets {
    pub counts: BTreeMap<Task, usize>,
    #[serde(default)]
    pub difficulty: Option<DifficultyQuota>,
    #[serde(default)]
    pub balance: BalancePolicy,
    /// Candidate instantiations kept per template and scene.
    #[serde(default = "default_per_scene")]
    pub per_scene_limit: usize,
    /// Attach supervision at this level (omitted for evaluation splits).
    #[serde(default)]
    pub supervision_level: Option<u8>,
}

impl Targets {
    pub fn new(mcq: usize, counting: usize, detection: usize) -> Targets {
        Targets {
            counts: [(Task::Mcq, mcq), (Task::Counting, counting), (Task::Detection, detection)].into(),
            difficulty: None,
            balance: BalancePolicy::default(),
            per_scene_limit: default_per_scene(),
            supervision_level: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Targets, QaError> {
        let t: Targets =
            serde_json::from_str(text).map_err(|e| QaError::Io { path: "targets".into(), message: e.to_string() })?;
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), QaError> {
        let bad = |m: &str| QaError::Io { path: "targets".into(), message: m.into() };
        if !(self.balance.max_count_fraction > 0.0 && self.balance.max_count_fraction <= 1.0) {
            return Err(bad("max_count_fraction must be in (0, 1]"));
        }
        if let Some(q) = &self.difficulty {
            if q.max_fraction.len() != q.edges.len() + 1 || q.edges.windows(2).any(|w| w[0] >= w[1]) {
                return Err(bad("difficulty quota needs increasing edges and one fraction per bin"));
            }
        }
        if let Some(l) = self.supervision_level {
            if !(1..=4).contains(&l) {
                return Err(QaError::InvalidLevel(l));
            }
        }
        Ok(())
    }

    pub fn count(&self, task: Task) -> usize {
        self.counts.get(&task).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shortfall {
    pub task: Task,
    pub target: usize,
    pub produced: usize,
    /// (template_id, candidates available, accepted)
    pub per_template: Vec<(String, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub questions: Vec<QuestionInstance>,
    pub shortfall: Vec<Shortfall>,
    pub rejected_by_verifier: usize,
}

impl Dataset {
    /// Plain-text summary of unmet targets per template.
    pub fn shortfall_report(&self) -> String {
        let mut s = String::new();
        if self.shortfall.is_empty() {
            s.push_str("all targets met\n");
        }
        for f in &self.shortfall {
            let _ = writeln!(s, "{:?}: produced {} of {}", f.task, f.produced, f.target);
            for (t, avail, took) in &f.per_template {
                let _ = writeln!(s, "  {t}: {took} accepted of {avail} candidates");
            }
        }
        if self.rejected_by_verifier > 0 {
            let _ = writeln!(s, "{} candidates failed re-verification", self.rejected_by_verifier);
        }
        s
    }
}

/// Scene inputs for generation. Graphs must have been built with `params`.
pub struct SceneInput<'a> {
    pub scene: &'a ResolvedScene,
    pub metadata: &'a SceneMetadata,
    pub graphs: &'a RelationGraphs,
}

struct Selector<'t> {
    targets: &'t Targets,
    positions: BTreeMap<usize, Vec<usize>>,
    count_values: BTreeMap<u64, usize>,
    bins: BTreeMap<(Task, usize), usize>,
    texts: BTreeSet<(String, String)>,
}

impl Selector<'_> {
    fn admits(&self, q: &QuestionInstance, target: usize) -> bool {
        if self.texts.contains(&(q.scene_id.clone(), q.text.clone())) {
            return false;
        }
        if let Some(quota) = &self.targets.difficulty {
            let b = quota.bin(q.reasoning_difficulty);
            let cap = (quota.max_fraction[b] * target as f64).ceil() as usize;
            if self.bins.get(&(q.task, b)).copied().unwrap_or(0) + 1 > cap {
                return false;
            }
        }
        if let Some(v) = q.gt_count() {
            let cap = (self.targets.balance.max_count_fraction * target as f64).floor() as usize;
            if self.count_values.get(&v).copied().unwrap_or(0) + 1 > cap.max(1) {
                return false;
            }
        }
        true
    }

    /// Reorder options so the correct one lands on a least-used position
    /// of its option-count group: seeded reshuffles first, then a direct
    /// move.
    fn rebalance(&self, q: &mut QuestionInstance, seed: u64) {
        let k = q.option_count();
        let zeros = vec![0; k];
        let counts = self.positions.get(&k).unwrap_or(&zeros);
        let least = *counts.iter().min().unwrap_or(&0);
        let mut rng = seed::rng(seed, seed_path!["reshuffle", q.scene_id.as_str(), q.text.as_str()]);
        let mut tries = 0;
        while counts[q.gt_index().unwrap_or(0)] > least {
            let mut perm: Vec<usize> = (0..k).collect();
            if tries < self.targets.balance.reshuffles {
                perm.shuffle(&mut rng);
            } else {
                let cur = q.gt_index().unwrap_or(0);
                let dst = counts.iter().position(|&c| c == least).unwrap_or(0);
                perm.swap(cur, dst);
            }
            permute(q, &perm);
            tries += 1;
        }
    }

    fn accept(&mut self, q: &QuestionInstance) {
        self.texts.insert((q.scene_id.clone(), q.text.clone()));
        if let Some(quota) = &self.targets.difficulty {
            *self.bins.entry((q.task, quota.bin(q.reasoning_difficulty))).or_default() += 1;
        }
        if let Some(v) = q.gt_count() {
            *self.count_values.entry(v).or_default() += 1;
        }
        if let Some(i) = q.gt_index() {
            let k = q.option_count();
            self.positions.entry(k).or_insert_with(|| vec![0; k])[i] += 1;
        }
    }
}

/// New option order: position j takes the option previously at perm[j].
fn permute(q: &mut QuestionInstance, perm: &[usize]) {
    let Some(opts) = q.options.as_mut() else { return };
    let old_opts = opts.clone();
    let old_vals = q.program.options.clone();
    let gt = q.answer.as_int().unwrap_or(0) as usize;
    for (j, &p) in perm.iter().enumerate() {
        opts[j] = old_opts[p].clone();
        q.program.options[j] = old_vals[p].clone();
        if p == gt {
            q.answer = AnswerValue::Int(j as u64);
        }
    }
}

/// Rejection-sample questions to the target counts. Templates of a task are
/// drawn round-robin from seeded candidate pools; every accepted question
/// is re-derived by the independent checker first.
pub fn generate_dataset(
    scenes: &[SceneInput<'_>],
    lib: &AssetLibrary,
    templates: &[QuestionTemplate],
    targets: &Targets,
    params: &RelationParams,
    seed: u64,
) -> Result<Dataset, QaError> {
    targets.validate()?;
    for t in templates {
        t.validate()?;
    }
    let mut scenes: Vec<&SceneInput> = scenes.iter().collect();
    scenes.sort_by(|a, b| a.scene.scene_id().cmp(b.scene.scene_id()));

    // per scene, per template candidates
    let per_scene: Vec<Vec<Vec<QuestionInstance>>> = scenes
        .par_iter()
        .map(|s| {
            let ctx = SceneContext::new(s.scene, s.metadata, s.graphs, lib);
            templates
                .iter()
                .map(|t| {
                    if targets.count(t.task) == 0 {
                        return Vec::new();
                    }
                    candidates(t, &ctx, seed, targets.per_scene_limit)
                })
                .collect()
        })
        .collect();
    let scene_index: BTreeMap<&str, usize> =
        scenes.iter().enumerate().map(|(i, s)| (s.scene.scene_id(), i)).collect();

    let mut sel = Selector {
        targets,
        positions: BTreeMap::new(),
        count_values: BTreeMap::new(),
        bins: BTreeMap::new(),
        texts: BTreeSet::new(),
    };
    let mut out = Dataset::default();
    for task in Task::ALL {
        let target = targets.count(task);
        if target == 0 {
            continue;
        }
        let tids: Vec<usize> = (0..templates.len()).filter(|&i| templates[i].task == task).collect();
        let mut pools: Vec<Vec<QuestionInstance>> = tids
            .iter()
            .map(|&ti| {
                let mut pool: Vec<QuestionInstance> = per_scene.iter().flat_map(|s| s[ti].iter().cloned()).collect();
                pool.shuffle(&mut seed::rng(seed, seed_path!["pool", templates[ti].template_id.as_str()]));
                pool
            })
            .collect();
        let avail: Vec<usize> = pools.iter().map(Vec::len).collect();
        let mut taken = vec![0usize; tids.len()];
        let mut cursor = vec![0usize; tids.len()];
        let mut chosen: Vec<QuestionInstance> = Vec::new();
        'fill: loop {
            let mut progressed = false;
            for k in 0..tids.len() {
                if chosen.len() == target {
                    break 'fill;
                }
                while cursor[k] < pools[k].len() {
                    let i = cursor[k];
                    cursor[k] += 1;
                    if !sel.admits(&pools[k][i], target) {
                        continue;
                    }
                    let mut q = std::mem::replace(&mut pools[k][i], placeholder());
                    if q.task == Task::Mcq {
                        sel.rebalance(&mut q, seed);
                    }
                    let s = &scenes[scene_index[q.scene_id.as_str()]];
                    if let Err(e) = crate::verify::check_question(&q, s.scene, s.metadata, params) {
                        log::warn!("{} in {}: {e}", q.template_id, q.scene_id);
                        out.rejected_by_verifier += 1;
                        continue;
                    }
                    sel.accept(&q);
                    chosen.push(q);
                    taken[k] += 1;
                    progressed = true;
                    break;
                }
            }
            if !progressed {
                break;
            }
        }
        if task == Task::Counting {
            trim_counts(&mut chosen, targets.balance.max_count_fraction);
        }
        if chosen.len() < target {
            log::warn!("{task:?}: produced {} of {target}", chosen.len());
            out.shortfall.push(Shortfall {
                task,
                target,
                produced: chosen.len(),
                per_template: tids
                    .iter()
                    .enumerate()
                    .map(|(k, &ti)| (templates[ti].template_id.clone(), avail[k], taken[k]))
                    .collect(),
            });
        }
        out.questions.extend(chosen);
    }

    for (i, q) in out.questions.iter_mut().enumerate() {
        q.qid = format!("q{:06}", i + 1);
    }
    if let Some(level) = targets.supervision_level {
        let ctxs: Vec<SceneContext> =
            scenes.iter().map(|s| SceneContext::new(s.scene, s.metadata, s.graphs, lib)).collect();
        for q in &mut out.questions {
            let ctx = &ctxs[scene_index[q.scene_id.as_str()]];
            q.supervision = Some(emit_supervision(q, ctx, level)?);
        }
    }
    Ok(out)
}

fn placeholder() -> QuestionInstance {
    QuestionInstance {
        qid: String::new(),
        scene_id: String::new(),
        images: vec![],
        view_ids: vec![],
        image_size: [0, 0],
        task: Task::Mcq,
        template_id: String::new(),
        text: String::new(),
        options: None,
        answer: AnswerValue::Int(0),
        reasoning_difficulty: 0.0,
        visibility_difficulty: 0.0,
        key_objects: BTreeSet::new(),
        sparse: false,
        program: super::Program {
            kind: super::ProgramKind::Locate,
            slots: BTreeMap::new(),
            view_id: None,
            relation: None,
            relation2: None,
            category: None,
            category2: None,
            options: vec![],
            plan: vec![],
        },
        supervision: None,
    }
}

/// When the pool ran short, drop the latest questions of the dominant
/// counting answer until it holds at most `frac` of the set.
fn trim_counts(chosen: &mut Vec<QuestionInstance>, frac: f64) {
    loop {
        let mut freq: BTreeMap<u64, usize> = BTreeMap::new();
        for q in chosen.iter() {
            *freq.entry(q.gt_count().unwrap_or(0)).or_default() += 1;
        }
        let Some((&v, &n)) = freq.iter().max_by_key(|(_, &n)| n) else { return };
        if n as f64 <= frac * chosen.len() as f64 || chosen.len() <= 1 {
            return;
        }
        let last = chosen.iter().rposition(|q| q.gt_count() == Some(v)).expect("value present");
        chosen.remove(last);
    }
}
