//! Independent re-derivation of question answers from raw scene geometry.
//!
//! Nothing here calls into question generation: slot resolution,
//! relation tests, visibility screening and box projection are all redone
//! from the scene, the view metadata and the geometry/relations primitives.

use std::collections::BTreeSet;

use crate::geometry::{iou, project_box_to_bbox2, Bbox2, CameraModel, ProjectedShape};
use crate::qa::{Description, OptionValue, ProgramKind, QuestionInstance, Task};
use crate::relations::{camera_centric_relations, contact_relation, object_centric_relation, RelationLabel, RelationParams};
use crate::render::{key_object_visibility, SceneMetadata};
use crate::scene::{ResolvedScene, SceneObject, Shape};

const SEEN_MAX_OCCLUSION: f64 = 0.9;
const CLEAR_MAX_OCCLUSION: f64 = 0.1;
const MIN_BOX_IOU: f64 = 0.9;

/// True when the recorded answer, options and evidence all follow from the
/// scene under default relation parameters.
pub fn verify_answer(q: &QuestionInstance, scene: &ResolvedScene, metadata: &SceneMetadata) -> bool {
    check_question(q, scene, metadata, &RelationParams::default()).is_ok()
}

struct Checker<'a> {
    q: &'a QuestionInstance,
    scene: &'a ResolvedScene,
    meta: &'a SceneMetadata,
    params: &'a RelationParams,
}

type Check<T = ()> = Result<T, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

impl<'a> Checker<'a> {
    fn matching(&self, d: &Description) -> Vec<&'a SceneObject> {
        self.scene
            .objects
            .iter()
            .filter(|o| o.category == d.category && d.tags.iter().all(|t| o.tags.contains(t)))
            .collect()
    }

    fn resolve(&self, d: &Description) -> Check<&'a SceneObject> {
        match self.matching(d).as_slice() {
            [one] => Ok(one),
            many => Err(format!("description {d:?} matches {} objects", many.len())),
        }
    }

    fn slot(&self, name: &str) -> Check<&'a SceneObject> {
        let d = self.q.program.slots.get(name).ok_or_else(|| format!("missing slot {name}"))?;
        self.resolve(d)
    }

    fn relation(&self) -> Check<RelationLabel> {
        self.q.program.relation.ok_or_else(|| "missing relation".to_string())
    }

    fn category(&self) -> Check<&'a Description> {
        self.q.program.category.as_ref().ok_or_else(|| "missing category".to_string())
    }

    fn camera(&self) -> Check<(&'a str, &'a CameraModel)> {
        let v = self.q.program.view_id.as_deref().ok_or("missing view")?;
        ensure(self.q.view_ids.iter().any(|x| x == v), || format!("view {v} not cited"))?;
        let rec = self.meta.view(v).ok_or_else(|| format!("unknown view {v}"))?;
        Ok((v, &rec.camera))
    }

    fn seen(&self, view: &str, id: &str) -> bool {
        self.meta.get(view, id).is_some_and(|m| {
            m.in_frustum && m.occlusion_ratio < SEEN_MAX_OCCLUSION && m.bbox2.is_some_and(|b| b.area() > 0.0)
        })
    }

    /// "x is `label` of y" recomputed from poses and extents.
    fn holds(&self, x: &SceneObject, y: &SceneObject, label: RelationLabel) -> bool {
        if x.instance_id == y.instance_id {
            return false;
        }
        match label {
            l if l.is_horizontal() => y.has_front && object_centric_relation(y, x, self.params) == Some(l),
            RelationLabel::On | RelationLabel::Under => contact_relation(x, y, self.params) == Some(label),
            _ => false,
        }
    }

    fn holds_in_view(&self, cam: &CameraModel, x: &SceneObject, y: &SceneObject, label: RelationLabel) -> bool {
        camera_centric_relations(cam, x, y, self.params).is_ok_and(|r| r.contains(&(true, label)))
    }

    fn related(&self, anchor: &SceneObject, label: RelationLabel) -> Vec<&'a SceneObject> {
        self.scene.objects.iter().filter(|o| self.holds(o, anchor, label)).collect()
    }

    fn unique_related(&self, anchor: &SceneObject, label: RelationLabel, category: &str) -> Check<&'a SceneObject> {
        let hits: Vec<_> = self.related(anchor, label).into_iter().filter(|o| o.category == category).collect();
        match hits.as_slice() {
            [one] => Ok(one),
            _ => Err(format!("{} {category} objects are {label:?} {}", hits.len(), anchor.instance_id)),
        }
    }

    fn gt_index(&self) -> Check<usize> {
        let opts = self.q.options.as_ref().ok_or("MCQ without options")?;
        ensure((2..=4).contains(&opts.len()), || format!("{} options", opts.len()))?;
        ensure(opts.iter().collect::<BTreeSet<_>>().len() == opts.len(), || "duplicate option text".into())?;
        ensure(self.q.program.options.len() == opts.len(), || "option values do not match options".into())?;
        let i = self.q.answer.as_int().ok_or("MCQ answer is not an index")? as usize;
        ensure(i < opts.len(), || format!("answer index {i} out of range"))?;
        for (text, v) in opts.iter().zip(&self.q.program.options) {
            let ok = match v {
                OptionValue::Label(l) => text == l.option_text(),
                OptionValue::Category(c) => *text == c.replace('_', " "),
                OptionValue::Object(d) => text.ends_with(&d.category.replace('_', " ")),
            };
            ensure(ok, || format!("option text {text:?} does not render {v:?}"))?;
        }
        Ok(i)
    }

    /// Exactly the option at the gt index satisfies `truth`.
    fn one_true(&self, truth: impl Fn(&OptionValue) -> Check<bool>) -> Check {
        let gt = self.gt_index()?;
        for (i, v) in self.q.program.options.iter().enumerate() {
            let t = truth(v)?;
            ensure(t == (i == gt), || {
                if i == gt {
                    format!("correct option {v:?} is false")
                } else {
                    format!("distractor {v:?} is true")
                }
            })?;
        }
        Ok(())
    }

    fn label_options(&self, want: RelationLabel) -> Check {
        self.one_true(|v| match v {
            OptionValue::Label(l) => Ok(*l == want),
            other => Err(format!("unexpected option {other:?}")),
        })
    }

    fn expect_key(&self, objs: &[&SceneObject]) -> Check {
        let want: BTreeSet<String> = objs.iter().map(|o| o.instance_id.clone()).collect();
        ensure(want == self.q.key_objects, || format!("key objects {:?}, expected {want:?}", self.q.key_objects))
    }

    fn expect_count(&self, n: usize) -> Check {
        let got = self.q.answer.as_int().ok_or("count answer is not an integer")?;
        ensure(got == n as u64, || format!("count {got}, expected {n}"))
    }

    fn projected(&self, view: &str, o: &SceneObject) -> Option<Bbox2> {
        let cam = &self.meta.view(view)?.camera;
        let shape = match &o.shape {
            Shape::Box(b) => ProjectedShape::Box(b),
            Shape::Mesh(m) => ProjectedShape::WorldMesh(m),
        };
        project_box_to_bbox2(cam, shape).map(|p| p.bbox)
    }

    fn expect_boxes(&self, target: &SceneObject) -> Check {
        let gt = self.q.answer.boxes();
        let want: Vec<&String> = self.q.view_ids.iter().filter(|v| self.seen(v, &target.instance_id)).collect();
        let got: Vec<&String> = gt.iter().map(|g| &g.view_id).collect();
        ensure(!gt.is_empty() && want == got, || format!("boxes cover views {got:?}, expected {want:?}"))?;
        for g in gt {
            let b = g.bbox;
            ensure(b.is_valid() && b.area() > 0.0, || format!("degenerate box in {}", g.view_id))?;
            let cam = &self.meta.view(&g.view_id).ok_or("unknown view")?.camera;
            ensure(b.x_min >= 0.0 && b.y_min >= 0.0 && b.x_max <= cam.width as f64 && b.y_max <= cam.height as f64, || {
                format!("box in {} not clipped to the image", g.view_id)
            })?;
            let geo = self.projected(&g.view_id, target).ok_or("target does not project")?;
            ensure(iou(&b, &geo) >= MIN_BOX_IOU, || format!("box in {} disagrees with projection", g.view_id))?;
            let meta = self.meta.get(&g.view_id, &target.instance_id).and_then(|m| m.bbox2).ok_or("no metadata box")?;
            ensure(iou(&b, &meta) >= MIN_BOX_IOU, || format!("box in {} disagrees with metadata", g.view_id))?;
        }
        Ok(())
    }

    fn common(&self) -> Check {
        let q = self.q;
        ensure(q.scene_id == self.scene.scene_id() && q.scene_id == self.meta.scene_id, || "scene mismatch".into())?;
        ensure(q.program.kind.task() == q.task, || "program does not answer this task".into())?;
        ensure(!q.view_ids.is_empty(), || "no cited views".into())?;
        ensure(q.view_ids.iter().collect::<BTreeSet<_>>().len() == q.view_ids.len(), || "repeated view".into())?;
        ensure(q.images.len() == q.view_ids.len(), || "image list does not match views".into())?;
        for (img, v) in q.images.iter().zip(&q.view_ids) {
            ensure(self.meta.view(v).is_some(), || format!("unknown view {v}"))?;
            ensure(*img == format!("{}/{v}.png", q.scene_id), || format!("image path {img}"))?;
        }
        ensure(!q.key_objects.is_empty(), || "no key objects".into())?;
        for k in &q.key_objects {
            ensure(self.scene.object(k).is_some(), || format!("unknown key object {k}"))?;
            ensure(q.view_ids.iter().any(|v| self.seen(v, k)), || format!("{k} not visible in any cited view"))?;
        }
        if q.sparse {
            let all_clear = q.view_ids.iter().any(|v| {
                q.key_objects.iter().all(|k| {
                    self.meta.get(v, k).is_some_and(|m| m.in_frustum && m.occlusion_ratio < CLEAR_MAX_OCCLUSION)
                })
            });
            ensure(!all_clear, || "a single view shows every key object".into())?;
        }
        let vis = key_object_visibility(&q.key_objects, self.meta, &q.view_ids).map_err(|e| e.to_string())?;
        ensure((vis - q.visibility_difficulty).abs() <= 1e-6, || format!("visibility {vis} != {}", q.visibility_difficulty))?;
        ensure(q.reasoning_difficulty.is_finite() && q.reasoning_difficulty >= 1.0, || "reasoning difficulty".into())?;
        match q.task {
            Task::Mcq => ensure(q.options.is_some(), || "MCQ without options".into()),
            _ => ensure(q.options.is_none(), || "options on a non-MCQ".into()),
        }
    }

    fn answer(&self) -> Check {
        use ProgramKind::*;
        match self.q.program.kind {
            ObjectDirection => {
                let r = self.slot("ref")?;
                let t = self.slot("target")?;
                ensure(r.has_front, || "reference has no front".into())?;
                let l = object_centric_relation(r, t, self.params).ok_or("no direction")?;
                self.expect_key(&[r, t])?;
                self.label_options(l)
            }
            ChainDirection => {
                let r = self.slot("ref")?;
                let m = self.slot("mid")?;
                let t = self.unique_related(m, self.relation()?, &self.category()?.category)?;
                ensure(r.has_front && r.instance_id != t.instance_id && r.instance_id != m.instance_id, || {
                    "invalid reference".into()
                })?;
                let l = object_centric_relation(r, t, self.params).ok_or("no direction")?;
                self.expect_key(&[r, m, t])?;
                self.label_options(l)
            }
            CameraLeftRight => {
                let (v, cam) = self.camera()?;
                let a = self.slot("a")?;
                let b = self.slot("b")?;
                ensure(self.seen(v, &a.instance_id) && self.seen(v, &b.instance_id), || "not both seen".into())?;
                let l = [RelationLabel::CamLeft, RelationLabel::CamRight]
                    .into_iter()
                    .find(|&l| self.holds_in_view(cam, a, b, l))
                    .ok_or("no left/right order")?;
                self.expect_key(&[a, b])?;
                self.label_options(l)
            }
            CameraDepth => {
                let (v, cam) = self.camera()?;
                let mut objs = Vec::new();
                for o in &self.q.program.options {
                    let OptionValue::Object(d) = o else { return Err(format!("unexpected option {o:?}")) };
                    let x = self.resolve(d)?;
                    ensure(self.seen(v, &x.instance_id), || format!("{} not seen in {v}", x.instance_id))?;
                    objs.push(x);
                }
                self.expect_key(&objs)?;
                self.one_true(|o| {
                    let OptionValue::Object(d) = o else { unreachable!() };
                    let x = self.resolve(d)?;
                    Ok(objs
                        .iter()
                        .filter(|y| y.instance_id != x.instance_id)
                        .all(|y| self.holds_in_view(cam, x, y, RelationLabel::CamCloser)))
                })
            }
            IdentityByRelation => {
                let a = self.slot("anchor")?;
                let subs = self.related(a, self.relation()?);
                let [x] = subs.as_slice() else { return Err(format!("{} related objects", subs.len())) };
                self.expect_key(&[a, x])?;
                self.one_true(|o| match o {
                    OptionValue::Category(c) => Ok(subs.iter().any(|s| s.category == *c)),
                    other => Err(format!("unexpected option {other:?}")),
                })
            }
            CountCategory => {
                let members = self.matching(self.category()?);
                self.expect_key(&members)?;
                self.expect_count(members.len())
            }
            CountRelation => {
                let a = self.slot("anchor")?;
                let cat = &self.category()?.category;
                let members: Vec<_> =
                    self.related(a, self.relation()?).into_iter().filter(|o| &o.category == cat).collect();
                let mut key = members.clone();
                key.push(a);
                self.expect_key(&key)?;
                self.expect_count(members.len())
            }
            Locate => {
                let x = self.slot("target")?;
                self.expect_key(&[x])?;
                self.expect_boxes(x)
            }
            LocateByRelation => {
                let a = self.slot("anchor")?;
                let x = self.unique_related(a, self.relation()?, &self.category()?.category)?;
                self.expect_key(&[a, x])?;
                self.expect_boxes(x)
            }
            LocateChain => {
                let a = self.slot("anchor")?;
                let rel2 = self.q.program.relation2.ok_or("missing second relation")?;
                let cat2 = self.q.program.category2.as_deref().ok_or("missing second category")?;
                let x2 = self.unique_related(a, rel2, cat2)?;
                let x1 = self.unique_related(x2, self.relation()?, &self.category()?.category)?;
                self.expect_key(&[a, x2, x1])?;
                self.expect_boxes(x1)
            }
        }
    }
}

/// Like [`verify_answer`] with explicit relation parameters; the error names
/// the first failed check.
pub fn check_question(
    q: &QuestionInstance,
    scene: &ResolvedScene,
    metadata: &SceneMetadata,
    params: &RelationParams,
) -> Result<(), String> {
    let c = Checker { q, scene, meta: metadata, params };
    c.common()?;
    c.answer()
}
