//! Grounded question generation: rule-based templates instantiated against
//! scene geometry, with answers, distractors, difficulty scores and
//! four-level supervision traces all derived from the scene.

mod dataset;
mod describe;
mod difficulty;
mod instantiate;
mod supervision;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::Bbox2;
use crate::relations::{Frame, RelationLabel};

pub use dataset::{generate_dataset, BalancePolicy, Dataset, DifficultyQuota, SceneInput, Shortfall, Targets};
pub use describe::{describe_objects, plural, Description};
pub use difficulty::{hop_count, plan_objects, reasoning_difficulty, LOG_WEIGHT};
pub use instantiate::{candidates, instantiate_question, is_visible, SceneContext, SPARSE_OCCLUSION, VISIBLE_MAX_OCCLUSION};
pub use supervision::emit_supervision;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QaError {
    #[error("invalid template `{template}`: {reason}")]
    InvalidTemplate { template: String, reason: String },
    #[error("plan step {step} is not resolvable: {reason}")]
    Unresolvable { step: usize, reason: String },
    #[error("supervision level {0} outside 1..=4")]
    InvalidLevel(u8),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "MCQ")]
    Mcq,
    Counting,
    Detection,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Mcq, Task::Counting, Task::Detection];
}

/// The closed set of question programs. Each fixes the plan shape, the
/// slots, and how the answer follows from geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProgramKind {
    /// Direction of a target in a reference object's frame.
    ObjectDirection,
    /// As above, with the target identified through a relation to a third
    /// object.
    ChainDirection,
    /// Image-left/right order of two objects in one view.
    CameraLeftRight,
    /// Which of several objects is closest to the camera in one view.
    CameraDepth,
    /// Which category the unique object in a relation to an anchor has.
    IdentityByRelation,
    CountCategory,
    CountRelation,
    Locate,
    LocateByRelation,
    LocateChain,
}

impl ProgramKind {
    pub fn task(self) -> Task {
        use ProgramKind::*;
        match self {
            ObjectDirection | ChainDirection | CameraLeftRight | CameraDepth | IdentityByRelation => Task::Mcq,
            CountCategory | CountRelation => Task::Counting,
            Locate | LocateByRelation | LocateChain => Task::Detection,
        }
    }

    /// Abstract plan: the step kinds in order.
    pub fn plan_shape(self) -> Vec<StepKind> {
        use ProgramKind::*;
        use StepKind::*;
        match self {
            ObjectDirection => vec![Ground, Ground, Hop],
            ChainDirection => vec![Ground, Ground, Hop, Hop],
            CameraLeftRight => vec![Ground, Ground, Hop],
            CameraDepth => vec![Ground, Hop],
            IdentityByRelation => vec![Ground, Hop],
            CountCategory => vec![Ground, Aggregate],
            CountRelation => vec![Ground, Ground, Hop, Aggregate],
            Locate => vec![Ground, Localize],
            LocateByRelation => vec![Ground, Hop, Localize],
            LocateChain => vec![Ground, Hop, Hop, Localize],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    Ground,
    Hop,
    Aggregate,
    Localize,
}

fn default_views() -> [usize; 2] {
    [2, 4]
}

/// A question template as authored in the templates directory.
///
/// `text_pattern` slots: `{ref}`, `{target}`, `{a}`, `{b}`, `{anchor}`,
/// `{mid}`, `{category}`, `{plural}`, `{relation}`, `{relation2}`,
/// `{category2}`, `{view}` (1-based image number).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionTemplate {
    pub template_id: String,
    pub task: Task,
    pub program: ProgramKind,
    pub text_pattern: String,
    /// Step kinds; must equal the program's plan shape when given.
    #[serde(default)]
    pub plan: Option<Vec<StepKind>>,
    /// MCQ only, in 2..=4.
    #[serde(default)]
    pub option_count: Option<usize>,
    /// Require that no cited view shows all key objects with occlusion < 0.1.
    #[serde(default)]
    pub sparse: bool,
    /// Inclusive range of cited views.
    #[serde(default = "default_views")]
    pub views: [usize; 2],
    /// Relation labels the template may use (program default when empty).
    #[serde(default)]
    pub relations: Vec<RelationLabel>,
}

impl QuestionTemplate {
    pub fn from_json(text: &str) -> Result<QuestionTemplate, QaError> {
        let t: QuestionTemplate = serde_json::from_str(text)
            .map_err(|e| QaError::InvalidTemplate { template: "?".into(), reason: e.to_string() })?;
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), QaError> {
        let bad = |reason: String| QaError::InvalidTemplate { template: self.template_id.clone(), reason };
        if self.program.task() != self.task {
            return Err(bad(format!("program {:?} answers {:?}, not {:?}", self.program, self.program.task(), self.task)));
        }
        let shape = self.program.plan_shape();
        if let Some(p) = &self.plan {
            if *p != shape {
                return Err(bad(format!("plan {p:?} does not match {:?}", shape)));
            }
        }
        match self.task {
            Task::Mcq => {
                let k = self.option_count.ok_or_else(|| bad("MCQ templates need option_count".into()))?;
                if !(2..=4).contains(&k) {
                    return Err(bad(format!("option_count {k} outside 2..=4")));
                }
                if self.program == ProgramKind::CameraLeftRight && k != 2 {
                    return Err(bad("left/right questions have exactly 2 options".into()));
                }
            }
            _ if self.option_count.is_some() => return Err(bad("option_count is MCQ-only".into())),
            _ => {}
        }
        let [lo, hi] = self.views;
        if lo == 0 || lo > hi {
            return Err(bad(format!("invalid view range [{lo}, {hi}]")));
        }
        if self.text_pattern.trim().is_empty() {
            return Err(bad("empty text pattern".into()));
        }
        Ok(())
    }

    pub fn plan(&self) -> Vec<StepKind> {
        self.program.plan_shape()
    }
}

pub fn load_templates(dir: impl AsRef<Path>) -> Result<Vec<QuestionTemplate>, QaError> {
    let dir = dir.as_ref();
    let io = |p: &Path, m: String| QaError::Io { path: p.display().to_string(), message: m };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| io(dir, e.to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let text = std::fs::read_to_string(&p).map_err(|e| io(&p, e.to_string()))?;
        let t = QuestionTemplate::from_json(&text).map_err(|e| io(&p, e.to_string()))?;
        out.push(t);
    }
    let mut ids = BTreeSet::new();
    for t in &out {
        if !ids.insert(t.template_id.clone()) {
            return Err(QaError::InvalidTemplate { template: t.template_id.clone(), reason: "duplicate template_id".into() });
        }
    }
    Ok(out)
}

/// One step of a plan resolved against a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum PlanStep {
    /// Perceptual grounding of one object (or a category) by description.
    Ground { objects: Vec<String> },
    /// Relational hop from `from` to each of `to` over the graph of `frame`.
    Hop { label: RelationLabel, frame: Frame, from: String, to: Vec<String> },
    Aggregate,
    Localize { views: Vec<String> },
}

/// Model-facing value of an option.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum OptionValue {
    Label(RelationLabel),
    Object(Description),
    Category(String),
}

/// Everything the checker needs to re-derive the answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub kind: ProgramKind,
    /// Named object descriptions (`ref`, `target`, `a`, `b`, `anchor`,
    /// `mid`).
    #[serde(default)]
    pub slots: BTreeMap<String, Description>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<RelationLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation2: Option<RelationLabel>,
    /// Category filter for counting and relational targets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Description>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category2: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<OptionValue>,
    pub plan: Vec<PlanStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtBox {
    pub view_id: String,
    #[serde(rename = "box")]
    pub bbox: Bbox2,
}

/// Ground-truth answer. MCQ answers are the 0-based option index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnswerValue {
    Int(u64),
    Boxes(Vec<GtBox>),
}

impl AnswerValue {
    pub fn as_int(&self) -> Option<u64> {
        match self {
            AnswerValue::Int(v) => Some(*v),
            AnswerValue::Boxes(_) => None,
        }
    }

    pub fn boxes(&self) -> &[GtBox] {
        match self {
            AnswerValue::Boxes(b) => b,
            AnswerValue::Int(_) => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub view_id: String,
    pub instance_id: String,
    pub bbox: Bbox2,
}

/// Machine-checkable content of a supervision step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Claim {
    Relation { subject: String, object: String, label: RelationLabel, frame: Frame },
    SameInstance { instance_id: String, view_ids: Vec<String> },
    Count { members: Vec<String>, value: u64 },
    VisibleIn { instance_id: String, view_id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub evidence: Vec<Evidence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim: Option<Claim>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisionTrace {
    pub level: u8,
    pub steps: Vec<TraceStep>,
    pub final_answer: AnswerValue,
}

/// One dataset record (one JSON line).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionInstance {
    pub qid: String,
    pub scene_id: String,
    /// Image paths relative to the render root, one per cited view.
    pub images: Vec<String>,
    pub view_ids: Vec<String>,
    pub image_size: [u32; 2],
    pub task: Task,
    pub template_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<String>>,
    pub answer: AnswerValue,
    pub reasoning_difficulty: f64,
    pub visibility_difficulty: f64,
    pub key_objects: BTreeSet<String>,
    pub sparse: bool,
    pub program: Program,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supervision: Option<SupervisionTrace>,
}

impl QuestionInstance {
    /// Number of MCQ options (0 for other tasks).
    pub fn option_count(&self) -> usize {
        self.options.as_ref().map_or(0, Vec::len)
    }

    pub fn gt_index(&self) -> Option<usize> {
        (self.task == Task::Mcq).then(|| self.answer.as_int()).flatten().map(|v| v as usize)
    }

    pub fn gt_count(&self) -> Option<u64> {
        (self.task == Task::Counting).then(|| self.answer.as_int()).flatten()
    }
}

pub fn write_jsonl(path: impl AsRef<Path>, questions: &[QuestionInstance]) -> Result<(), QaError> {
    let path = path.as_ref();
    let io = |m: String| QaError::Io { path: path.display().to_string(), message: m };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| io(e.to_string()))?);
    for q in questions {
        writeln!(f, "{}", crate::canonical::to_string(q)).map_err(|e| io(e.to_string()))?;
    }
    f.flush().map_err(|e| io(e.to_string()))
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<QuestionInstance>, QaError> {
    let path = path.as_ref();
    let io = |m: String| QaError::Io { path: path.display().to_string(), message: m };
    let f = std::fs::File::open(path).map_err(|e| io(e.to_string()))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| io(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}
