use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;

use super::resolved::resolve_object;
use super::{
    anchor_relation_satisfied, AnchorLabel, AnchorRelation, ObjectSpec, Placement, PlacedObject, SceneError, SceneInstance,
    SceneObject, ThemeConfig,
};
use crate::assets::{query_assets_by_tags, AssetLibrary};
use crate::canonical::round_sig;
use crate::geometry::{wrap_angle, Pose3, Vec3};
use crate::relations::{RelationLabel, RelationParams};
use crate::seed_path;

/// Vertical intervals closer than this are treated as touching, not
/// overlapping.
pub(crate) const VERTICAL_TOL: f64 = 1e-6;

/// Structural checks a theme must pass before sampling.
pub fn validate_theme(theme: &ThemeConfig, lib: &AssetLibrary) -> Result<(), SceneError> {
    let bad = |reason: String| SceneError::InvalidTheme { theme: theme.theme_id.clone(), reason };
    let [ex, ey] = theme.floor.extent;
    if !(ex > 0.0 && ey > 0.0) {
        return Err(bad(format!("floor extent must be positive, got [{ex}, {ey}]")));
    }
    let [smin, smax] = theme.scale_range;
    if !(smin >= 0.0 && smin <= smax) {
        return Err(bad(format!("scale_range [{smin}, {smax}] is not a valid range")));
    }
    if theme.overlap_tolerance < 0.0 || theme.max_attempts == 0 {
        return Err(bad("overlap_tolerance must be ≥ 0 and max_attempts ≥ 1".into()));
    }
    for (si, spec) in theme.object_specs.iter().enumerate() {
        let (lo, hi) = spec.count.bounds();
        if lo > hi {
            return Err(bad(format!("spec {si}: empty count range [{lo}, {hi}]")));
        }
        let candidates = query_assets_by_tags(lib, &spec.required_tags, Some(&spec.category)).map_err(|e| bad(format!("spec {si}: {e}")))?;
        if candidates.is_empty() {
            return Err(bad(format!("spec {si}: no asset in category `{}` with the required tags", spec.category)));
        }
        match &spec.placement {
            Placement::Stochastic { clearance } if *clearance < 0.0 => {
                return Err(bad(format!("spec {si}: negative clearance")));
            }
            Placement::Grid { rows, cols, .. } => {
                if *rows == 0 || *cols == 0 {
                    return Err(bad(format!("spec {si}: empty grid")));
                }
                if !spec.anchor_relations.is_empty() {
                    return Err(bad(format!("spec {si}: grid placements cannot carry anchor relations")));
                }
                let most = (hi as f64 * smax).round() as u32;
                if most > rows * cols {
                    return Err(bad(format!("spec {si}: up to {most} objects exceed the {rows}×{cols} grid")));
                }
            }
            Placement::Stochastic { .. } => {}
        }
        for rel in &spec.anchor_relations {
            let [dlo, dhi] = rel.distance_range;
            if !(dlo >= 0.0 && dlo <= dhi) {
                return Err(bad(format!("spec {si}: invalid distance_range [{dlo}, {dhi}]")));
            }
            if !theme.object_specs[..si].iter().any(|s| s.category == rel.target_category) {
                return Err(bad(format!(
                    "spec {si}: anchor target `{}` must be declared by an earlier spec",
                    rel.target_category
                )));
            }
        }
    }
    Ok(())
}

/// Samples a layout. Deterministic in `(theme, lib, seed)`; the random
/// stream of object `k` of spec `i` depends only on
/// `(seed, theme_id, i, k, attempt)`.
pub fn sample_scene(theme: &ThemeConfig, lib: &AssetLibrary, seed: u64) -> Result<SceneInstance, SceneError> {
    validate_theme(theme, lib)?;
    let tid = theme.theme_id.as_str();
    let [smin, smax] = theme.scale_range;
    let scale = if smax > smin { crate::seed::rng(seed, seed_path!["scale", tid]).gen_range(smin..=smax) } else { smin };

    let mut placed: Vec<SceneObject> = Vec::new();
    for (si, spec) in theme.object_specs.iter().enumerate() {
        let (lo, hi) = spec.count.bounds();
        let base = crate::seed::rng(seed, seed_path![tid, "count", si]).gen_range(lo..=hi);
        let n = (base as f64 * scale).round() as u32;
        let candidates = query_assets_by_tags(lib, &spec.required_tags, Some(&spec.category)).expect("validated");
        if let Placement::Grid { rows, cols, .. } = spec.placement {
            if n > rows * cols {
                return Err(SceneError::InvalidTheme {
                    theme: tid.into(),
                    reason: format!("spec {si}: {n} objects exceed the {rows}×{cols} grid"),
                });
            }
        }
        for k in 0..n {
            let instance_id = format!("{}.{si}.{k}", spec.category);
            let mut done = false;
            let mut skipped = false;
            for attempt in 0..theme.max_attempts {
                let mut rng = crate::seed::rng(seed, seed_path![tid, si, k, attempt]);
                let asset_id = &candidates[rng.gen_range(0..candidates.len())];
                let proposal = match propose(theme, spec, &placed, k, &mut rng) {
                    Proposal::Pose(p) => p,
                    Proposal::NoTarget => {
                        skipped = true;
                        break;
                    }
                };
                let pose = Pose3::new(
                    Vec3::new(round_sig(proposal.position.x), round_sig(proposal.position.y), round_sig(proposal.position.z)),
                    round_sig(proposal.yaw),
                );
                let obj = PlacedObject { instance_id: instance_id.clone(), asset_id: asset_id.clone(), pose, scale: 1.0 };
                let resolved = resolve_object(&obj, lib, placed.len() as u32 + 1)?;
                if admissible(theme, spec, &resolved, &placed) {
                    placed.push(resolved);
                    done = true;
                    break;
                }
            }
            if skipped {
                log::debug!("{tid}: no anchor target for {instance_id}; skipped");
                continue;
            }
            if !done {
                return Err(SceneError::ConstraintUnsatisfiable {
                    spec: si,
                    category: spec.category.clone(),
                    instance_id,
                    attempts: theme.max_attempts,
                });
            }
        }
    }

    let scene = SceneInstance {
        scene_id: format!("{tid}-{seed:016x}"),
        theme_id: tid.into(),
        seed,
        floor: theme.floor.clone(),
        lighting: theme.lighting.clone(),
        objects: placed
            .iter()
            .map(|o| PlacedObject { instance_id: o.instance_id.clone(), asset_id: o.asset_id.clone(), pose: o.pose, scale: o.scale })
            .collect(),
    };
    Ok(crate::canonical::round_trip(&scene))
}

enum Proposal {
    Pose(Pose3),
    NoTarget,
}

fn propose(theme: &ThemeConfig, spec: &ObjectSpec, placed: &[SceneObject], k: u32, rng: &mut impl Rng) -> Proposal {
    let [ex, ey] = theme.floor.extent;
    match &spec.placement {
        Placement::Grid { rows, cols, spacing, center, yaw } => {
            let (row, col) = (k / cols, k % cols);
            let x = center[0] + (col as f64 - (*cols as f64 - 1.0) / 2.0) * spacing[0];
            let y = center[1] + (row as f64 - (*rows as f64 - 1.0) / 2.0) * spacing[1];
            Proposal::Pose(Pose3::new(Vec3::new(x, y, 0.0), *yaw))
        }
        Placement::Stochastic { .. } => {
            let Some(rel) = spec.anchor_relations.first() else {
                let x = rng.gen_range(-ex / 2.0..=ex / 2.0);
                let y = rng.gen_range(-ey / 2.0..=ey / 2.0);
                return Proposal::Pose(Pose3::new(Vec3::new(x, y, 0.0), rng.gen_range(-PI..PI)));
            };
            let targets: Vec<&SceneObject> = placed
                .iter()
                .filter(|o| o.category == rel.target_category)
                .filter(|o| rel.relation_label.horizontal().is_none() || o.has_front)
                .collect();
            if targets.is_empty() {
                return Proposal::NoTarget;
            }
            let target = targets[rng.gen_range(0..targets.len())];
            let position = anchored_position(rel, target, rng);
            let yaw = if spec.face_anchor {
                let d = target.pose.position - position;
                d.y.atan2(d.x)
            } else {
                rng.gen_range(-PI..PI)
            };
            Proposal::Pose(Pose3::new(position, wrap_angle(yaw)))
        }
    }
}

/// Interval of the angle φ (measured from the reference's forward axis
/// toward its right axis) inside which a horizontal label holds.
pub(crate) fn label_angle_range(label: RelationLabel, epsilon: f64) -> (f64, f64) {
    let a = epsilon.asin();
    let margin = 1e-6;
    let (lo, hi) = match label {
        RelationLabel::Front => (-a, a),
        RelationLabel::FrontRight => (a, FRAC_PI_2 - a),
        RelationLabel::Right => (FRAC_PI_2 - a, FRAC_PI_2 + a),
        RelationLabel::BackRight => (FRAC_PI_2 + a, PI - a),
        RelationLabel::Back => (PI - a, PI + a),
        RelationLabel::BackLeft => (-PI + a, -FRAC_PI_2 - a),
        RelationLabel::Left => (-FRAC_PI_2 - a, -FRAC_PI_2 + a),
        RelationLabel::FrontLeft => (-FRAC_PI_2 + a, -a),
        _ => (-PI, PI),
    };
    (lo + margin, hi - margin)
}

fn anchored_position(rel: &AnchorRelation, target: &SceneObject, rng: &mut impl Rng) -> Vec3 {
    let [dlo, dhi] = rel.distance_range;
    let tp = target.pose.position;
    match rel.relation_label {
        AnchorLabel::On => {
            let fp = target.footprint();
            let (u, v) = (rng.gen_range(-1.0..=1.0) * fp.half.0 * 0.5, rng.gen_range(-1.0..=1.0) * fp.half.1 * 0.5);
            let mut p = target.pose.to_world(Vec3::new(u, v, 0.0));
            p.z = target.top_z();
            p
        }
        AnchorLabel::Near => {
            let r = rng.gen_range(dlo..=dhi);
            let phi = rng.gen_range(-PI..PI);
            tp + Vec3::new(phi.cos(), phi.sin(), 0.0) * r - Vec3::new(0.0, 0.0, tp.z)
        }
        label => {
            let eps = RelationParams::default().epsilon;
            let (lo, hi) = label_angle_range(label.horizontal().expect("horizontal"), eps);
            let phi = rng.gen_range(lo..hi);
            let r = rng.gen_range(dlo..=dhi);
            let dir = target.pose.forward() * phi.cos() + target.pose.right() * phi.sin();
            Vec3::new(tp.x + dir.x * r, tp.y + dir.y * r, 0.0)
        }
    }
}

pub(crate) fn vertical_overlap(a: &SceneObject, b: &SceneObject) -> bool {
    a.base_z() < b.top_z() - VERTICAL_TOL && b.base_z() < a.top_z() - VERTICAL_TOL
}

fn admissible(theme: &ThemeConfig, spec: &ObjectSpec, obj: &SceneObject, placed: &[SceneObject]) -> bool {
    let [ex, ey] = theme.floor.extent;
    let fp = obj.footprint();
    if !fp.inside_floor((ex, ey)) {
        return false;
    }
    let probe = match spec.placement {
        Placement::Stochastic { clearance } => fp.inflated(clearance),
        Placement::Grid { .. } => fp,
    };
    let clear = placed
        .iter()
        .filter(|o| vertical_overlap(obj, o))
        .all(|o| probe.intersection_area(&o.footprint()) <= theme.overlap_tolerance);
    if !clear {
        return false;
    }
    let params = RelationParams::default();
    spec.anchor_relations.iter().all(|rel| {
        placed.iter().filter(|t| t.category == rel.target_category).any(|t| anchor_relation_satisfied(t, obj, rel, &params))
    })
}
