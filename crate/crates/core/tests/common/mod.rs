//! A small rendered demo split shared by the integration tests of one
//! binary.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use sparseview::assets::{load_asset_library, AssetLibrary};
use sparseview::pipeline::{load_scenes, prepare_scenes, run_pipeline_with, PipelineConfig, PreparedScene};
use sparseview::geometry::Bbox2;
use sparseview::qa::{AnswerValue, Dataset, GtBox, Program, ProgramKind, QuestionInstance, Targets, Task};

pub struct Demo {
    pub cfg: PipelineConfig,
    pub lib: AssetLibrary,
    pub scenes: Vec<PreparedScene>,
    pub dataset: Dataset,
}

impl Demo {
    pub fn scene(&self, scene_id: &str) -> &PreparedScene {
        self.scenes.iter().find(|s| s.resolved.scene_id() == scene_id).expect("scene in fixture")
    }

    pub fn render_root(&self) -> PathBuf {
        self.cfg.out.join("render")
    }

    pub fn questions(&self) -> &[QuestionInstance] {
        &self.dataset.questions
    }
}

pub fn scratch(name: &str) -> PathBuf {
    let p = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&p);
    std::fs::create_dir_all(&p).unwrap();
    p
}

/// Four scenes per demo theme with targets the pool can meet.
pub fn demo() -> &'static Demo {
    static DEMO: OnceLock<Demo> = OnceLock::new();
    DEMO.get_or_init(|| {
        let out = scratch(&format!("demo_{}", env!("CARGO_CRATE_NAME")));
        let mut cfg = PipelineConfig::demo(&out);
        cfg.scenes_per_theme = 4;
        let run = run_pipeline_with(&cfg, Some(Targets::new(120, 40, 120))).expect("demo pipeline");
        let lib = load_asset_library(&cfg.assets).unwrap();
        let scenes =
            prepare_scenes(load_scenes(out.join("scenes")).unwrap(), &lib, out.join("render"), &cfg.relation_params).unwrap();
        Demo { cfg, lib, scenes, dataset: run.dataset }
    })
}

fn bare(qid: &str, task: Task, answer: AnswerValue) -> QuestionInstance {
    QuestionInstance {
        qid: qid.into(),
        scene_id: "fixture".into(),
        images: vec![],
        view_ids: vec!["v0".into(), "v1".into()],
        image_size: [640, 480],
        task,
        template_id: format!("{task:?}").to_lowercase(),
        text: "fixture question".into(),
        options: None,
        answer,
        reasoning_difficulty: 1.0,
        visibility_difficulty: 0.0,
        key_objects: BTreeSet::new(),
        sparse: false,
        program: Program {
            kind: ProgramKind::Locate,
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

/// MCQ with options "o0".."o{k-1}".
pub fn mcq(qid: &str, k: usize, gt: u64) -> QuestionInstance {
    let mut q = bare(qid, Task::Mcq, AnswerValue::Int(gt));
    q.options = Some((0..k).map(|i| format!("o{i}")).collect());
    q.program.kind = ProgramKind::ObjectDirection;
    q
}

pub fn counting(qid: &str, gt: u64) -> QuestionInstance {
    let mut q = bare(qid, Task::Counting, AnswerValue::Int(gt));
    q.program.kind = ProgramKind::CountCategory;
    q
}

pub fn detection(qid: &str, boxes: &[(&str, [f64; 4])]) -> QuestionInstance {
    let gt = boxes.iter().map(|(v, b)| gt_box(v, *b)).collect();
    bare(qid, Task::Detection, AnswerValue::Boxes(gt))
}

pub fn gt_box(view: &str, b: [f64; 4]) -> GtBox {
    GtBox { view_id: view.into(), bbox: Bbox2::new(b[0], b[1], b[2], b[3]) }
}
