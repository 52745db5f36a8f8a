use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use super::describe::{describe_objects, plural, Description};
use super::difficulty::{plan_objects, reasoning_difficulty};
use super::{AnswerValue, GtBox, OptionValue, PlanStep, Program, ProgramKind, QuestionInstance, QuestionTemplate, Task};
use crate::assets::AssetLibrary;
use crate::relations::{Frame, RelationGraph, RelationGraphs, RelationLabel};
use crate::render::{key_object_visibility, SceneMetadata};
use crate::scene::ResolvedScene;
use crate::seed::{self, Key};
use crate::seed_path;

/// Objects above this occlusion in a view do not count as seen there.
pub const VISIBLE_MAX_OCCLUSION: f64 = 0.9;
/// Sparse-view threshold: a view "shows" an object below this occlusion.
pub const SPARSE_OCCLUSION: f64 = 0.1;

const VIEW_DRAWS: usize = 12;

/// Everything a template is instantiated against.
pub struct SceneContext<'a> {
    pub scene: &'a ResolvedScene,
    pub metadata: &'a SceneMetadata,
    pub graphs: &'a RelationGraphs,
    pub lib: &'a AssetLibrary,
    pub descriptions: BTreeMap<String, Description>,
}

impl<'a> SceneContext<'a> {
    pub fn new(
        scene: &'a ResolvedScene,
        metadata: &'a SceneMetadata,
        graphs: &'a RelationGraphs,
        lib: &'a AssetLibrary,
    ) -> SceneContext<'a> {
        SceneContext { scene, metadata, graphs, lib, descriptions: describe_objects(scene) }
    }

    fn described(&self) -> impl Iterator<Item = (&str, &Description)> {
        self.descriptions.iter().map(|(k, v)| (k.as_str(), v))
    }

    fn has_front(&self, id: &str) -> bool {
        self.scene.object(id).is_some_and(|o| o.has_front)
    }

    fn category(&self, id: &str) -> &str {
        self.scene.object(id).map_or("", |o| o.category.as_str())
    }

    fn categories(&self) -> BTreeSet<&str> {
        self.scene.objects.iter().map(|o| o.category.as_str()).collect()
    }

    fn text(&self, id: &str) -> String {
        self.descriptions[id].text(self.lib)
    }
}

/// Seen in a view: in frustum, a positive-area box, occlusion below
/// [`VISIBLE_MAX_OCCLUSION`].
pub fn is_visible(metadata: &SceneMetadata, view_id: &str, instance_id: &str) -> bool {
    metadata.get(view_id, instance_id).is_some_and(|m| {
        m.in_frustum && m.occlusion_ratio < VISIBLE_MAX_OCCLUSION && m.bbox2.is_some_and(|b| b.area() > 0.0)
    })
}

fn shows_clearly(metadata: &SceneMetadata, view_id: &str, instance_id: &str) -> bool {
    metadata.get(view_id, instance_id).is_some_and(|m| m.in_frustum && m.occlusion_ratio < SPARSE_OCCLUSION)
}

/// A fully resolved slot assignment before view and option selection.
#[derive(Debug, Clone)]
struct Binding {
    slots: BTreeMap<&'static str, String>,
    view_id: Option<String>,
    relation: Option<RelationLabel>,
    relation2: Option<RelationLabel>,
    category: Option<Description>,
    category2: Option<String>,
    correct: Option<OptionValue>,
    distractors: Vec<OptionValue>,
    /// Options already fixed (correct first) when distractors shape the plan.
    fixed_options: bool,
    count: Option<u64>,
    locate: Option<String>,
    plan: Vec<PlanStep>,
}

impl Binding {
    fn new(plan: Vec<PlanStep>) -> Binding {
        Binding {
            slots: BTreeMap::new(),
            view_id: None,
            relation: None,
            relation2: None,
            category: None,
            category2: None,
            correct: None,
            distractors: Vec::new(),
            fixed_options: false,
            count: None,
            locate: None,
            plan,
        }
    }
}

fn ground(ids: &[&str]) -> PlanStep {
    PlanStep::Ground { objects: ids.iter().map(|s| s.to_string()).collect() }
}

fn hop(label: RelationLabel, frame: Frame, from: &str, to: &[&str]) -> PlanStep {
    PlanStep::Hop { label, frame, from: from.into(), to: to.iter().map(|s| s.to_string()).collect() }
}

const DEFAULT_CHAIN_RELATIONS: [RelationLabel; 5] =
    [RelationLabel::On, RelationLabel::Front, RelationLabel::Back, RelationLabel::Left, RelationLabel::Right];

fn relations_for(t: &QuestionTemplate) -> Vec<RelationLabel> {
    if t.relations.is_empty() {
        DEFAULT_CHAIN_RELATIONS.to_vec()
    } else {
        t.relations.clone()
    }
}

/// Subjects of `(·, object, label)` the label can apply to (horizontal
/// labels need a reference with a front).
fn subjects<'g>(ctx: &SceneContext, g: &'g RelationGraph, object: &str, label: RelationLabel) -> Vec<&'g str> {
    if label.is_horizontal() && !ctx.has_front(object) {
        return Vec::new();
    }
    g.subjects_of(object, label)
}

/// Subjects grouped by category, keeping only categories with exactly one.
fn unique_by_category<'g>(ctx: &SceneContext, subs: &[&'g str]) -> Vec<(String, &'g str)> {
    let mut by: BTreeMap<&str, Vec<&'g str>> = BTreeMap::new();
    for s in subs {
        by.entry(ctx.category(s)).or_default().push(s);
    }
    by.into_iter().filter(|(_, v)| v.len() == 1).map(|(c, v)| (c.to_string(), v[0])).collect()
}

fn horizontal_label(g: &RelationGraph, subject: &str, object: &str) -> Option<RelationLabel> {
    g.labels(subject, object).into_iter().find(|l| l.is_horizontal())
}

fn bindings(t: &QuestionTemplate, ctx: &SceneContext, seed: u64) -> Vec<Binding> {
    use ProgramKind::*;
    let g = &ctx.graphs.object_centric;
    let oc = || Frame::ObjectCentric;
    let mut out = Vec::new();
    match t.program {
        ObjectDirection => {
            for (r, _) in ctx.described().filter(|(r, _)| ctx.has_front(r)) {
                for (tg, _) in ctx.described().filter(|(tg, _)| *tg != r) {
                    let Some(label) = horizontal_label(g, tg, r) else { continue };
                    let mut b = Binding::new(vec![ground(&[r]), ground(&[tg]), hop(label, oc(), r, &[tg])]);
                    b.slots.insert("ref", r.into());
                    b.slots.insert("target", tg.into());
                    b.correct = Some(OptionValue::Label(label));
                    b.distractors =
                        RelationLabel::HORIZONTAL.iter().filter(|&&l| l != label).map(|&l| OptionValue::Label(l)).collect();
                    out.push(b);
                }
            }
        }
        ChainDirection => {
            for (m, _) in ctx.described() {
                for rel in relations_for(t) {
                    for (cat, tg) in unique_by_category(ctx, &subjects(ctx, g, m, rel)) {
                        for (r, _) in ctx.described().filter(|(r, _)| ctx.has_front(r) && *r != m && *r != tg) {
                            let Some(label) = horizontal_label(g, tg, r) else { continue };
                            let plan = vec![
                                ground(&[r]),
                                ground(&[m]),
                                hop(rel, oc(), m, &[tg]),
                                hop(label, oc(), r, &[tg]),
                            ];
                            let mut b = Binding::new(plan);
                            b.slots.insert("ref", r.into());
                            b.slots.insert("mid", m.into());
                            b.relation = Some(rel);
                            b.category = Some(Description { category: cat.clone(), tags: vec![] });
                            b.correct = Some(OptionValue::Label(label));
                            b.distractors = RelationLabel::HORIZONTAL
                                .iter()
                                .filter(|&&l| l != label)
                                .map(|&l| OptionValue::Label(l))
                                .collect();
                            out.push(b);
                        }
                    }
                }
            }
        }
        CameraLeftRight => {
            for view in &ctx.metadata.views {
                let Some(cg) = ctx.graphs.camera(&view.view_id) else { continue };
                let seen: Vec<&str> =
                    ctx.described().map(|(id, _)| id).filter(|id| is_visible(ctx.metadata, &view.view_id, id)).collect();
                for &a in &seen {
                    for &bo in seen.iter().filter(|&&x| x != a) {
                        let labels = cg.labels(a, bo);
                        let Some(label) =
                            labels.into_iter().find(|l| matches!(l, RelationLabel::CamLeft | RelationLabel::CamRight))
                        else {
                            continue;
                        };
                        let frame = Frame::CameraCentric(view.view_id.clone());
                        let mut b = Binding::new(vec![ground(&[a]), ground(&[bo]), hop(label, frame, bo, &[a])]);
                        b.slots.insert("a", a.into());
                        b.slots.insert("b", bo.into());
                        b.view_id = Some(view.view_id.clone());
                        b.correct = Some(OptionValue::Label(label));
                        b.distractors = vec![OptionValue::Label(label.inverse())];
                        out.push(b);
                    }
                }
            }
        }
        CameraDepth => {
            let k = t.option_count.unwrap_or(2);
            for view in &ctx.metadata.views {
                let Some(cg) = ctx.graphs.camera(&view.view_id) else { continue };
                let seen: Vec<&str> =
                    ctx.described().map(|(id, _)| id).filter(|id| is_visible(ctx.metadata, &view.view_id, id)).collect();
                for &c in &seen {
                    let farther: Vec<&str> =
                        seen.iter().copied().filter(|&o| o != c && cg.has_edge(c, o, RelationLabel::CamCloser)).collect();
                    if farther.len() + 1 < k {
                        continue;
                    }
                    // one option set per correct object, drawn from a per-binding stream
                    let mut rng = seed::rng(seed, seed_path!["depth", ctx.scene.scene_id(), view.view_id.as_str(), c]);
                    let mut pick = farther.clone();
                    pick.shuffle(&mut rng);
                    pick.truncate(k - 1);
                    pick.sort();
                    let mut all = vec![c];
                    all.extend(&pick);
                    let frame = Frame::CameraCentric(view.view_id.clone());
                    let mut b = Binding::new(vec![ground(&all), hop(RelationLabel::CamFarther, frame, c, &pick)]);
                    b.view_id = Some(view.view_id.clone());
                    b.correct = Some(OptionValue::Object(ctx.descriptions[c].clone()));
                    b.distractors = pick.iter().map(|p| OptionValue::Object(ctx.descriptions[*p].clone())).collect();
                    b.fixed_options = true;
                    out.push(b);
                }
            }
        }
        IdentityByRelation => {
            let cats = ctx.categories();
            for (a, _) in ctx.described() {
                for rel in relations_for(t) {
                    let subs = subjects(ctx, g, a, rel);
                    let [x] = subs.as_slice() else { continue };
                    let cx = ctx.category(x);
                    let mut b = Binding::new(vec![ground(&[a]), hop(rel, oc(), a, &[x])]);
                    b.slots.insert("anchor", a.into());
                    b.relation = Some(rel);
                    b.correct = Some(OptionValue::Category(cx.into()));
                    b.distractors = cats
                        .iter()
                        .filter(|&&c| c != cx && c != ctx.category(a))
                        .map(|&c| OptionValue::Category(c.into()))
                        .collect();
                    out.push(b);
                }
            }
        }
        CountCategory => {
            for cat in ctx.categories() {
                let tags: BTreeSet<&String> =
                    ctx.scene.objects.iter().filter(|o| o.category == cat).flat_map(|o| o.tags.iter()).collect();
                let mut filters = vec![Description { category: cat.into(), tags: vec![] }];
                filters.extend(tags.into_iter().map(|t| Description { category: cat.into(), tags: vec![t.clone()] }));
                for d in filters {
                    let members: Vec<&str> =
                        ctx.scene.objects.iter().filter(|o| d.matches(o)).map(|o| o.instance_id.as_str()).collect();
                    if members.is_empty() {
                        continue;
                    }
                    let mut b = Binding::new(vec![ground(&members), PlanStep::Aggregate]);
                    b.count = Some(members.len() as u64);
                    b.category = Some(d);
                    out.push(b);
                }
            }
        }
        CountRelation => {
            let cats = ctx.categories();
            for (a, _) in ctx.described() {
                for rel in relations_for(t) {
                    if rel.is_horizontal() && !ctx.has_front(a) {
                        continue;
                    }
                    let subs = subjects(ctx, g, a, rel);
                    for &cat in cats.iter().filter(|&&c| c != ctx.category(a)) {
                        let members: Vec<&str> = subs.iter().copied().filter(|s| ctx.category(s) == cat).collect();
                        let plan = vec![
                            ground(&[a]),
                            ground(&members),
                            hop(rel, oc(), a, &members),
                            PlanStep::Aggregate,
                        ];
                        let mut b = Binding::new(plan);
                        b.slots.insert("anchor", a.into());
                        b.relation = Some(rel);
                        b.category = Some(Description { category: cat.into(), tags: vec![] });
                        b.count = Some(members.len() as u64);
                        out.push(b);
                    }
                }
            }
        }
        Locate => {
            for (a, _) in ctx.described() {
                let mut b = Binding::new(vec![ground(&[a]), PlanStep::Localize { views: vec![] }]);
                b.slots.insert("target", a.into());
                b.locate = Some(a.into());
                out.push(b);
            }
        }
        LocateByRelation => {
            for (a, _) in ctx.described() {
                for rel in relations_for(t) {
                    for (cat, x) in unique_by_category(ctx, &subjects(ctx, g, a, rel)) {
                        let plan = vec![ground(&[a]), hop(rel, oc(), a, &[x]), PlanStep::Localize { views: vec![] }];
                        let mut b = Binding::new(plan);
                        b.slots.insert("anchor", a.into());
                        b.relation = Some(rel);
                        b.category = Some(Description { category: cat, tags: vec![] });
                        b.locate = Some(x.into());
                        out.push(b);
                    }
                }
            }
        }
        LocateChain => {
            for (a, _) in ctx.described() {
                for rel2 in relations_for(t) {
                    for (cat2, x2) in unique_by_category(ctx, &subjects(ctx, g, a, rel2)) {
                        for rel1 in relations_for(t) {
                            let subs: Vec<&str> = subjects(ctx, g, x2, rel1).into_iter().filter(|&s| s != a).collect();
                            for (cat1, x1) in unique_by_category(ctx, &subs) {
                                // the outer filter must be computed over all subjects
                                let all_of_cat = subjects(ctx, g, x2, rel1).into_iter().filter(|s| ctx.category(s) == cat1).count();
                                if all_of_cat != 1 {
                                    continue;
                                }
                                let plan = vec![
                                    ground(&[a]),
                                    hop(rel2, oc(), a, &[x2]),
                                    hop(rel1, oc(), x2, &[x1]),
                                    PlanStep::Localize { views: vec![] },
                                ];
                                let mut b = Binding::new(plan);
                                b.slots.insert("anchor", a.into());
                                b.relation = Some(rel1);
                                b.relation2 = Some(rel2);
                                b.category = Some(Description { category: cat1, tags: vec![] });
                                b.category2 = Some(cat2.clone());
                                b.locate = Some(x1.into());
                                out.push(b);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

fn option_text(v: &OptionValue, lib: &AssetLibrary) -> String {
    match v {
        OptionValue::Label(l) => l.option_text().into(),
        OptionValue::Object(d) => d.text(lib),
        OptionValue::Category(c) => c.replace('_', " "),
    }
}

/// Fill `{slot}` markers; any marker left over makes the template
/// inapplicable.
fn fill(pattern: &str, values: &BTreeMap<&str, String>) -> Option<String> {
    let mut out = String::with_capacity(pattern.len() + 32);
    let mut rest = pattern;
    while let Some(i) = rest.find('{') {
        out.push_str(&rest[..i]);
        let j = rest[i..].find('}')? + i;
        out.push_str(values.get(&rest[i + 1..j])?);
        rest = &rest[j + 1..];
    }
    out.push_str(rest);
    Some(out)
}

/// Pick cited views: a seeded subset within the template's range that
/// contains the required view, sees every key object somewhere, and (when
/// sparse) never shows all key objects clearly in a single view.
fn choose_views(
    t: &QuestionTemplate,
    ctx: &SceneContext,
    key: &BTreeSet<String>,
    required: Option<&str>,
    rng: &mut impl Rng,
) -> Option<Vec<String>> {
    let all: Vec<&str> = ctx.metadata.views.iter().map(|v| v.view_id.as_str()).collect();
    let [lo, hi] = t.views;
    let lo = lo.max(2);
    let hi = hi.min(all.len());
    if lo > hi {
        return None;
    }
    for _ in 0..VIEW_DRAWS {
        let n = rng.gen_range(lo..=hi);
        let mut pool: Vec<&str> = all.iter().copied().filter(|v| Some(*v) != required).collect();
        pool.shuffle(rng);
        let mut chosen: Vec<&str> = required.into_iter().collect();
        chosen.extend(pool.into_iter().take(n - chosen.len()));
        let seen_all = key.iter().all(|k| chosen.iter().any(|v| is_visible(ctx.metadata, v, k)));
        let sparse_ok =
            !t.sparse || !chosen.iter().any(|v| key.iter().all(|k| shows_clearly(ctx.metadata, v, k)));
        if seen_all && sparse_ok {
            // cite in scene view order
            return Some(all.iter().filter(|v| chosen.contains(v)).map(|v| v.to_string()).collect());
        }
    }
    None
}

fn finalize(t: &QuestionTemplate, ctx: &SceneContext, mut b: Binding, seed: u64) -> Option<QuestionInstance> {
    let mut rng = seed::rng(seed, &[]);
    let key = plan_objects(&b.plan);
    let view_ids = choose_views(t, ctx, &key, b.view_id.as_deref(), &mut rng)?;

    let answer: AnswerValue;
    let mut options = None;
    let mut option_values = Vec::new();
    match t.task {
        Task::Mcq => {
            let k = t.option_count?;
            let correct = b.correct.clone()?;
            let mut picked = b.distractors.clone();
            if !b.fixed_options {
                picked.shuffle(&mut rng);
            }
            if picked.len() + 1 < k {
                return None;
            }
            picked.truncate(k - 1);
            picked.push(correct.clone());
            picked.shuffle(&mut rng);
            let idx = picked.iter().position(|v| *v == correct)?;
            let texts: Vec<String> = picked.iter().map(|v| option_text(v, ctx.lib)).collect();
            if texts.iter().collect::<BTreeSet<_>>().len() != texts.len() {
                return None;
            }
            answer = AnswerValue::Int(idx as u64);
            options = Some(texts);
            option_values = picked;
        }
        Task::Counting => answer = AnswerValue::Int(b.count?),
        Task::Detection => {
            let target = b.locate.as_deref()?;
            let boxes: Vec<GtBox> = view_ids
                .iter()
                .filter(|v| is_visible(ctx.metadata, v, target))
                .map(|v| GtBox { view_id: v.clone(), bbox: ctx.metadata.get(v, target).and_then(|m| m.bbox2).expect("visible") })
                .collect();
            if boxes.is_empty() {
                return None;
            }
            for s in &mut b.plan {
                if let PlanStep::Localize { views } = s {
                    *views = boxes.iter().map(|g| g.view_id.clone()).collect();
                }
            }
            answer = AnswerValue::Boxes(boxes);
        }
    }

    let mut values: BTreeMap<&str, String> = BTreeMap::new();
    for (slot, id) in &b.slots {
        values.insert(slot, ctx.text(id));
    }
    if let Some(v) = &b.view_id {
        values.insert("view", (view_ids.iter().position(|x| x == v)? + 1).to_string());
    }
    if let Some(r) = b.relation {
        values.insert("relation", r.phrase().into());
    }
    if let Some(r) = b.relation2 {
        values.insert("relation2", r.phrase().into());
    }
    if let Some(d) = &b.category {
        let text = d.text(ctx.lib);
        values.insert("plural", plural(&text));
        values.insert("category", text);
    }
    if let Some(c) = &b.category2 {
        values.insert("category2", c.replace('_', " "));
    }
    let text = fill(&t.text_pattern, &values)?;

    let reasoning = reasoning_difficulty(&b.plan, ctx.graphs).ok()?;
    let visibility = key_object_visibility(&key, ctx.metadata, &view_ids).ok()?;
    let view0 = ctx.metadata.view(&view_ids[0])?;
    let program = Program {
        kind: t.program,
        slots: b.slots.iter().map(|(k, id)| (k.to_string(), ctx.descriptions[id].clone())).collect(),
        view_id: b.view_id.clone(),
        relation: b.relation,
        relation2: b.relation2,
        category: b.category.clone(),
        category2: b.category2.clone(),
        options: option_values,
        plan: b.plan,
    };
    let scene_id = ctx.scene.scene_id().to_string();
    Some(QuestionInstance {
        qid: String::new(),
        images: view_ids.iter().map(|v| format!("{scene_id}/{v}.png")).collect(),
        scene_id,
        image_size: [view0.camera.width, view0.camera.height],
        view_ids,
        task: t.task,
        template_id: t.template_id.clone(),
        text,
        options,
        answer,
        reasoning_difficulty: crate::canonical::round_sig(reasoning),
        visibility_difficulty: crate::canonical::round_sig(visibility),
        key_objects: key,
        sparse: t.sparse,
        program,
        supervision: None,
    })
}

/// Up to `limit` instantiations of a template in one scene, in a seeded
/// order. Each binding draws from its own derived stream, so the result for
/// a binding does not depend on which others were tried.
pub fn candidates(t: &QuestionTemplate, ctx: &SceneContext, seed: u64, limit: usize) -> Vec<QuestionInstance> {
    if ctx.metadata.views.len() < 2 || limit == 0 {
        return Vec::new();
    }
    let scene_id = ctx.scene.scene_id();
    let all = bindings(t, ctx, seed);
    let mut order: Vec<usize> = (0..all.len()).collect();
    order.shuffle(&mut seed::rng(seed, seed_path![scene_id, t.template_id.as_str(), "order"]));
    let mut out = Vec::new();
    for i in order {
        let s = seed::derive(seed, &[Key::from(scene_id), Key::from(t.template_id.as_str()), Key::from(i)]);
        if let Some(q) = finalize(t, ctx, all[i].clone(), s) {
            out.push(q);
            if out.len() == limit {
                break;
            }
        }
    }
    out
}

/// First seeded instantiation of the template, or `None` when it does not
/// apply to the scene.
pub fn instantiate_question(t: &QuestionTemplate, ctx: &SceneContext, seed: u64) -> Option<QuestionInstance> {
    candidates(t, ctx, seed, 1).into_iter().next()
}
