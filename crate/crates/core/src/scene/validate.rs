use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::resolved::resolve_object;
use super::sample::vertical_overlap;
use super::{AnchorLabel, AnchorRelation, SceneInstance, SceneObject, ThemeConfig};
use crate::assets::AssetLibrary;
use crate::relations::{contact_relation, object_centric_label, RelationLabel, RelationParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViolationKind {
    DuplicateInstance,
    UnknownAsset,
    OutOfFloor,
    Collision,
    AnchorViolated,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SceneViolation {
    pub kind: ViolationKind,
    pub instance_id: String,
    pub detail: String,
}

/// True when `child` stands in relation `rel` to `target`: the label holds
/// with `target` as reference and the horizontal center distance lies in
/// `rel.distance_range` (inclusive).
pub fn anchor_relation_satisfied(target: &SceneObject, child: &SceneObject, rel: &AnchorRelation, params: &RelationParams) -> bool {
    let d = child.pose.position - target.pose.position;
    let dist = d.x.hypot(d.y);
    let [lo, hi] = rel.distance_range;
    if !(lo..=hi).contains(&dist) {
        return false;
    }
    match rel.relation_label {
        AnchorLabel::Near => true,
        AnchorLabel::On => contact_relation(child, target, params) == Some(RelationLabel::On),
        label => {
            target.has_front && object_centric_label(&target.pose, child.pose.position, params) == label.horizontal()
        }
    }
}

/// Spec index encoded in an instance id `{category}.{spec}.{k}`.
fn spec_index(instance_id: &str) -> Option<usize> {
    let mut it = instance_id.rsplitn(3, '.');
    let _k: u32 = it.next()?.parse().ok()?;
    it.next()?.parse().ok()
}

/// Independent post-hoc check: duplicate ids, unresolvable assets,
/// out-of-floor footprints, footprint collisions beyond the theme tolerance
/// between vertically overlapping objects, and violated anchor relations.
pub fn validate_scene(scene: &SceneInstance, lib: &AssetLibrary, theme: &ThemeConfig) -> Vec<SceneViolation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut objects = Vec::new();
    for (i, o) in scene.objects.iter().enumerate() {
        if !seen.insert(o.instance_id.as_str()) {
            out.push(SceneViolation {
                kind: ViolationKind::DuplicateInstance,
                instance_id: o.instance_id.clone(),
                detail: "instance id used twice".into(),
            });
        }
        match resolve_object(o, lib, i as u32 + 1) {
            Ok(r) => objects.push(r),
            Err(e) => out.push(SceneViolation {
                kind: ViolationKind::UnknownAsset,
                instance_id: o.instance_id.clone(),
                detail: e.to_string(),
            }),
        }
    }
    let [ex, ey] = scene.floor.extent;
    for o in &objects {
        if !o.footprint().inside_floor((ex, ey)) {
            out.push(SceneViolation {
                kind: ViolationKind::OutOfFloor,
                instance_id: o.instance_id.clone(),
                detail: format!("footprint leaves the {ex}×{ey} m floor"),
            });
        }
    }
    for (i, a) in objects.iter().enumerate() {
        for b in &objects[i + 1..] {
            if !vertical_overlap(a, b) {
                continue;
            }
            let area = a.footprint().intersection_area(&b.footprint());
            if area > theme.overlap_tolerance {
                out.push(SceneViolation {
                    kind: ViolationKind::Collision,
                    instance_id: a.instance_id.clone(),
                    detail: format!("overlaps `{}` by {area:.6} m²", b.instance_id),
                });
            }
        }
    }
    let params = RelationParams::default();
    for o in &objects {
        let Some(spec) = spec_index(&o.instance_id).and_then(|si| theme.object_specs.get(si)) else { continue };
        if spec.category != o.category {
            continue;
        }
        for rel in &spec.anchor_relations {
            let ok = objects
                .iter()
                .filter(|t| t.category == rel.target_category && t.instance_id != o.instance_id)
                .any(|t| anchor_relation_satisfied(t, o, rel, &params));
            if !ok {
                out.push(SceneViolation {
                    kind: ViolationKind::AnchorViolated,
                    instance_id: o.instance_id.clone(),
                    detail: format!("{:?} of a `{}` within {:?} m", rel.relation_label, rel.target_category, rel.distance_range),
                });
            }
        }
    }
    out.sort();
    out
}
