mod common;

use std::collections::BTreeMap;

use sparseview::assets::AssetLibrary;
use sparseview::geometry::{iou, CameraModel, Vec3};
use sparseview::qa::{
    candidates, emit_supervision, generate_dataset, instantiate_question, is_visible, load_templates, AnswerValue, Claim,
    OptionValue, ProgramKind, QuestionTemplate, SceneContext, SceneInput, Targets, Task, SPARSE_OCCLUSION,
};
use sparseview::relations::{build_relation_graphs, object_centric_relation, Frame, RelationLabel, RelationParams};
use sparseview::render::{extract_scene_metadata, RenderOptions, ViewRecord, ViewpointClass};
use sparseview::scene::{testing, ResolvedScene};
use sparseview::verify::{check_question, verify_answer};

fn templates() -> Vec<QuestionTemplate> {
    load_templates(&common::demo().cfg.templates).unwrap()
}

fn template(id: &str) -> QuestionTemplate {
    templates().into_iter().find(|t| t.template_id == id).unwrap()
}

#[test]
fn generation_repeats_byte_for_byte() {
    let d = common::demo();
    let inputs: Vec<SceneInput> = d.scenes.iter().map(|s| s.input()).collect();
    let targets = Targets::new(120, 40, 120);
    let again = generate_dataset(&inputs, &d.lib, &templates(), &targets, &d.cfg.relation_params, d.cfg.global_seed).unwrap();
    let a: Vec<String> = d.questions().iter().map(sparseview::canonical::to_string).collect();
    let b: Vec<String> = again.questions.iter().map(sparseview::canonical::to_string).collect();
    assert_eq!(a, b);
    assert!(d.questions().len() >= 200, "fixture too small: {}", d.questions().len());
}

#[test]
fn instantiation_is_seeded() {
    let d = common::demo();
    let t = template("obj_dir_4");
    let mut seen = 0;
    for s in &d.scenes {
        let ctx = SceneContext::new(&s.resolved, &s.metadata, &s.graphs, &d.lib);
        let a = instantiate_question(&t, &ctx, 7);
        assert_eq!(a, instantiate_question(&t, &ctx, 7));
        if let Some(q) = a {
            seen += 1;
            assert_eq!(q.option_count(), 4);
        }
    }
    assert!(seen > 0);
}

#[test]
fn templates_without_bindings_are_absent() {
    let d = common::demo();
    let s = &d.scenes[0];
    let mut scene = s.resolved.clone();
    // direction questions need a reference with a front
    for o in &mut scene.objects {
        o.has_front = false;
    }
    let graphs = build_relation_graphs(&scene, &s.metadata.views, &s.metadata.objects, &RelationParams::default());
    let ctx = SceneContext::new(&scene, &s.metadata, &graphs, &d.lib);
    for t in templates().iter().filter(|t| matches!(t.program, ProgramKind::ObjectDirection | ProgramKind::ChainDirection)) {
        assert!(instantiate_question(t, &ctx, 1).is_none(), "{} applied without fronts", t.template_id);
    }
    let empty = AssetLibrary::empty();
    let lone = testing::resolved(vec![testing::box_object("crate", (0.0, 0.0, 0.0), (1.0, 1.0, 1.0), 0.0)], 6.0);
    let graphs = build_relation_graphs(&lone, &[], &[], &RelationParams::default());
    let no_views = extract_scene_metadata(&lone, vec![], &RenderOptions::default());
    let ctx = SceneContext::new(&lone, &no_views, &graphs, &empty);
    for t in templates() {
        assert!(instantiate_question(&t, &ctx, 1).is_none(), "{} applied without views", t.template_id);
    }
}

#[test]
fn every_generated_question_verifies() {
    let d = common::demo();
    for q in d.questions() {
        let s = d.scene(&q.scene_id);
        if let Err(e) = check_question(q, &s.resolved, &s.metadata, &d.cfg.relation_params) {
            panic!("{} ({}): {e}", q.qid, q.template_id);
        }
    }
}

#[test]
fn corrupted_answers_fail_verification() {
    let d = common::demo();
    let mut by_task = BTreeMap::new();
    for q in d.questions() {
        let s = d.scene(&q.scene_id);
        let mut bad = q.clone();
        bad.answer = match &q.answer {
            AnswerValue::Int(i) if q.task == Task::Mcq => AnswerValue::Int((*i + 1) % q.option_count() as u64),
            AnswerValue::Int(n) => AnswerValue::Int(n + 1),
            AnswerValue::Boxes(b) => {
                let mut b = b.clone();
                b[0].bbox.x_min += 0.5 * b[0].bbox.width();
                AnswerValue::Boxes(b)
            }
        };
        assert!(!verify_answer(&bad, &s.resolved, &s.metadata), "{} accepted a corrupted answer", q.qid);
        *by_task.entry(q.task).or_insert(0) += 1;
    }
    assert_eq!(by_task.len(), 3);
}

#[test]
fn distractor_made_true_fails_verification() {
    let d = common::demo();
    let mut checked = 0;
    for q in d.questions().iter().filter(|q| q.program.kind == ProgramKind::ObjectDirection) {
        let s = d.scene(&q.scene_id);
        let slot = |n: &str| {
            let desc = &q.program.slots[n];
            s.resolved.objects.iter().find(|o| desc.matches(o)).unwrap().clone()
        };
        let (r, t) = (slot("ref"), slot("target"));
        // turn the reference a quarter: the target now sits in another bin
        let mut scene = s.resolved.scene.clone();
        let placed = scene.objects.iter_mut().find(|p| p.instance_id == r.instance_id).unwrap();
        placed.pose.yaw += std::f64::consts::FRAC_PI_2;
        let Ok(mutated) = ResolvedScene::new(scene, &d.lib) else { continue };
        let r2 = mutated.object(&r.instance_id).unwrap();
        let Some(now) = object_centric_relation(r2, &t, &RelationParams::default()) else { continue };
        let gt = q.gt_index().unwrap();
        // three-option questions may not list the new label
        let Some(now_true) = q.program.options.iter().position(|o| *o == OptionValue::Label(now)) else { continue };
        assert_ne!(now_true, gt);
        assert!(!verify_answer(q, &mutated, &s.metadata), "{} survived a distractor edit", q.qid);
        checked += 1;
    }
    assert!(checked >= 5, "only {checked} direction questions mutated");
}

#[test]
fn answerability_and_sparse_guarantee() {
    let d = common::demo();
    for q in d.questions() {
        let s = d.scene(&q.scene_id);
        assert!(!q.text.is_empty() && q.reasoning_difficulty >= 1.0);
        assert!((0.0..=1.0).contains(&q.visibility_difficulty));
        if q.task == Task::Mcq {
            let opts = q.options.as_ref().unwrap();
            assert!((2..=4).contains(&opts.len()) && q.gt_index().unwrap() < opts.len());
        }
        if q.task == Task::Detection {
            let [w, h] = q.image_size;
            let key = q.key_objects.iter().next_back().unwrap();
            for g in q.answer.boxes() {
                assert!(g.bbox.area() > 0.0);
                assert!(g.bbox.x_min >= 0.0 && g.bbox.y_min >= 0.0 && g.bbox.x_max <= w as f64 && g.bbox.y_max <= h as f64);
                let meta = q.key_objects.iter().filter_map(|k| s.metadata.get(&g.view_id, k)?.bbox2).map(|b| iou(&b, &g.bbox));
                assert!(meta.fold(0.0, f64::max) >= 0.9, "{}: box unmoored from {key}", q.qid);
            }
        }
        if q.sparse {
            for v in &q.view_ids {
                let all_clear = q.key_objects.iter().all(|k| {
                    s.metadata.get(v, k).is_some_and(|m| m.in_frustum && m.occlusion_ratio < SPARSE_OCCLUSION)
                });
                assert!(!all_clear, "{}: view {v} shows every key object", q.qid);
            }
        }
    }
}

#[test]
fn balance_and_count_cap() {
    let d = common::demo();
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut values: BTreeMap<u64, usize> = BTreeMap::new();
    let mut n_count = 0;
    for q in d.questions() {
        if let Some(i) = q.gt_index() {
            groups.entry(q.option_count()).or_insert_with(|| vec![0; q.option_count()])[i] += 1;
        }
        if let Some(v) = q.gt_count() {
            *values.entry(v).or_default() += 1;
            n_count += 1;
        }
    }
    // greedy least-used placement keeps each group within one
    for (k, c) in &groups {
        let (lo, hi) = (c.iter().min().unwrap(), c.iter().max().unwrap());
        assert!(hi - lo <= 1, "{k} options: {c:?}");
    }
    assert!(groups.len() >= 2, "{groups:?}");
    for (v, c) in &values {
        assert!(*c as f64 <= 0.4 * n_count as f64, "count {v} takes {c} of {n_count}");
    }
}

#[test]
fn empty_targets_give_empty_dataset() {
    let d = common::demo();
    let inputs: Vec<SceneInput> = d.scenes.iter().map(|s| s.input()).collect();
    let out = generate_dataset(&inputs, &d.lib, &templates(), &Targets::new(0, 0, 0), &d.cfg.relation_params, 42).unwrap();
    assert!(out.questions.is_empty() && out.shortfall.is_empty());
    let none = generate_dataset(&[], &d.lib, &templates(), &Targets::new(5, 0, 0), &d.cfg.relation_params, 42).unwrap();
    assert!(none.questions.is_empty());
    assert_eq!(none.shortfall.len(), 1);
    assert!(none.shortfall_report().contains("produced 0 of 5"));
}

#[test]
fn supervision_levels() {
    let d = common::demo();
    let params = RelationParams::default();
    let mut relation_claims = 0;
    for q in d.questions().iter().step_by(3) {
        let s = d.scene(&q.scene_id);
        let ctx = SceneContext::new(&s.resolved, &s.metadata, &s.graphs, &d.lib);
        let l1 = emit_supervision(q, &ctx, 1).unwrap();
        assert!(l1.steps.is_empty());
        assert_eq!(l1.final_answer, q.answer);
        assert!(emit_supervision(q, &ctx, 0).is_err() && emit_supervision(q, &ctx, 5).is_err());

        let fresh = build_relation_graphs(&s.resolved, &s.metadata.views, &s.metadata.objects, &params);
        let l3 = emit_supervision(q, &ctx, 3).unwrap();
        assert!(!l3.steps.is_empty());
        for st in &l3.steps {
            match st.claim.as_ref() {
                Some(Claim::Relation { subject, object, label, frame }) => {
                    let g = match frame {
                        Frame::ObjectCentric => &fresh.object_centric,
                        Frame::CameraCentric(v) => fresh.camera(v).unwrap(),
                    };
                    assert!(g.has_edge(subject, object, *label), "{}: {subject} {label:?} {object} does not hold", q.qid);
                    relation_claims += 1;
                }
                Some(Claim::SameInstance { instance_id, view_ids }) => {
                    assert!(view_ids.len() >= 2);
                    for v in view_ids {
                        assert!(is_visible(&s.metadata, v, instance_id));
                    }
                }
                Some(Claim::VisibleIn { instance_id, view_id }) => assert!(is_visible(&s.metadata, view_id, instance_id)),
                Some(Claim::Count { members, value }) => {
                    assert_eq!(members.len() as u64, *value);
                    assert_eq!(Some(*value), q.gt_count());
                }
                None => {}
            }
        }

        let l4 = emit_supervision(q, &ctx, 4).unwrap();
        for st in &l4.steps {
            for e in &st.evidence {
                assert!(q.view_ids.contains(&e.view_id));
                assert_eq!(Some(e.bbox), s.metadata.get(&e.view_id, &e.instance_id).unwrap().bbox2);
            }
        }
        assert!(l4.steps.iter().any(|st| !st.evidence.is_empty()), "{}: no evidence at level 4", q.qid);
    }
    assert!(relation_claims > 20);
}

/// A crate and a person side by side, seen from both sides of the pair.
#[test]
fn camera_left_right_fixture() {
    let mut crate_ = testing::box_object("crate", (4.0, 1.0, 0.0), (0.8, 0.8, 0.8), 0.0);
    crate_.tags.insert("crate.red".into());
    let person = testing::box_object("person", (4.0, -1.0, 0.0), (0.5, 0.4, 1.7), 0.0);
    let scene = testing::resolved(vec![crate_, person], 12.0);
    let view = |id: &str, x: f64, yaw: f64| ViewRecord {
        view_id: id.into(),
        class: ViewpointClass::Egocentric,
        camera: CameraModel::new(Vec3::new(x, 0.0, 1.2), yaw, -0.1, 70f64.to_radians(), 320, 240).unwrap(),
    };
    let views = vec![view("front", 0.0, 0.0), view("back", 8.0, std::f64::consts::PI)];
    let metadata = extract_scene_metadata(&scene, views, &RenderOptions { n_rays: 256, seed: 1 });
    let graphs = build_relation_graphs(&scene, &metadata.views, &metadata.objects, &RelationParams::default());
    let lib = AssetLibrary::empty();
    let ctx = SceneContext::new(&scene, &metadata, &graphs, &lib);
    let t = template("cam_lr");

    let mut seen = BTreeMap::new();
    for seed in 0..40 {
        for q in candidates(&t, &ctx, seed, 8) {
            assert!(verify_answer(&q, &scene, &metadata));
            let view_id = q.program.view_id.clone().unwrap();
            let cam = &metadata.view(&view_id).unwrap().camera;
            let a = scene.objects.iter().find(|o| q.program.slots["a"].matches(o)).unwrap();
            let b = scene.objects.iter().find(|o| q.program.slots["b"].matches(o)).unwrap();
            // oracle: image column of the two base centers
            let ua = cam.project_point(a.center()).unwrap().u;
            let ub = cam.project_point(b.center()).unwrap().u;
            let want = if ua < ub { RelationLabel::CamLeft } else { RelationLabel::CamRight };
            let got = &q.program.options[q.gt_index().unwrap()];
            assert_eq!(*got, OptionValue::Label(want), "{}", q.text);
            seen.insert((view_id, a.instance_id.clone()), want);
        }
    }
    assert_eq!(seen.get(&("front".into(), "crate".into())), Some(&RelationLabel::CamLeft));
    assert_eq!(seen.get(&("back".into(), "crate".into())), Some(&RelationLabel::CamRight));
}
