//! Spatial relations in the object-centric and camera-centric frames, and
//! the per-view relation graphs built from them.
//!
//! Edges read "subject is `label` of object": `(cup, table, On)` means the
//! cup is on the table, `(chair, table, Front)` means the chair is in front
//! of the table.

mod graph;

use serde::{Deserialize, Serialize};

use crate::geometry::{CameraModel, Pose3, Vec3, NEAR_EPS};
use crate::scene::SceneObject;

pub use graph::{
    bfs_distances, build_relation_graphs, hop_distance, Edge, Frame, RelationGraph, RelationGraphs,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RelationError {
    #[error("object `{0}` is outside the view frustum")]
    OutOfFrustum(String),
    #[error("invalid relation parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationParams {
    /// Cosine components with magnitude strictly below this are zeroed.
    pub epsilon: f64,
    /// Largest vertical gap still counted as contact, meters.
    pub contact_gap: f64,
    /// Minimum footprint overlap as a fraction of the smaller footprint.
    pub contact_overlap_frac: f64,
    /// Camera-centric left/right dead zone, pixels.
    pub cam_u_dead_zone: f64,
    /// Camera-centric closer/farther dead zone, meters.
    pub cam_depth_dead_zone: f64,
}

impl Default for RelationParams {
    fn default() -> Self {
        RelationParams {
            epsilon: 0.1,
            contact_gap: 0.01,
            contact_overlap_frac: 0.25,
            cam_u_dead_zone: 1.0,
            cam_depth_dead_zone: 0.01,
        }
    }
}

impl RelationParams {
    pub fn validate(&self) -> Result<(), RelationError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(RelationError::InvalidParams(format!("epsilon {} not in (0, 1)", self.epsilon)));
        }
        if !(self.contact_gap > 0.0) {
            return Err(RelationError::InvalidParams("contact_gap must be positive".into()));
        }
        if !(self.contact_overlap_frac > 0.0 && self.contact_overlap_frac <= 1.0) {
            return Err(RelationError::InvalidParams("contact_overlap_frac not in (0, 1]".into()));
        }
        if self.cam_u_dead_zone < 0.0 || self.cam_depth_dead_zone < 0.0 {
            return Err(RelationError::InvalidParams("dead zones must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationLabel {
    Front,
    Back,
    Left,
    Right,
    FrontLeft,
    FrontRight,
    BackLeft,
    BackRight,
    On,
    Under,
    CamLeft,
    CamRight,
    CamCloser,
    CamFarther,
}

impl RelationLabel {
    pub const HORIZONTAL: [RelationLabel; 8] = [
        RelationLabel::Front,
        RelationLabel::FrontRight,
        RelationLabel::Right,
        RelationLabel::BackRight,
        RelationLabel::Back,
        RelationLabel::BackLeft,
        RelationLabel::Left,
        RelationLabel::FrontLeft,
    ];

    pub fn is_horizontal(self) -> bool {
        Self::HORIZONTAL.contains(&self)
    }

    pub fn is_camera_centric(self) -> bool {
        matches!(self, RelationLabel::CamLeft | RelationLabel::CamRight | RelationLabel::CamCloser | RelationLabel::CamFarther)
    }

    /// Label of the reverse edge for labels whose inverse is a label.
    pub fn inverse(self) -> RelationLabel {
        use RelationLabel::*;
        match self {
            Front => Back,
            Back => Front,
            Left => Right,
            Right => Left,
            FrontLeft => BackRight,
            FrontRight => BackLeft,
            BackLeft => FrontRight,
            BackRight => FrontLeft,
            On => Under,
            Under => On,
            CamLeft => CamRight,
            CamRight => CamLeft,
            CamCloser => CamFarther,
            CamFarther => CamCloser,
        }
    }

    /// Label after the reference turns counterclockwise by `quarters` × 90°
    /// with the other object fixed (horizontal labels only).
    pub fn rotate_reference(self, quarters: i32) -> RelationLabel {
        let Some(i) = Self::HORIZONTAL.iter().position(|&l| l == self) else { return self };
        // HORIZONTAL runs clockwise; a counterclockwise reference turn moves
        // fixed targets clockwise in the reference frame.
        Self::HORIZONTAL[(i as i32 + 2 * quarters).rem_euclid(8) as usize]
    }

    /// Words used in question text.
    pub fn phrase(self) -> &'static str {
        use RelationLabel::*;
        match self {
            Front => "in front of",
            Back => "behind",
            Left => "to the left of",
            Right => "to the right of",
            FrontLeft => "in front of and to the left of",
            FrontRight => "in front of and to the right of",
            BackLeft => "behind and to the left of",
            BackRight => "behind and to the right of",
            On => "on top of",
            Under => "under",
            CamLeft => "left of",
            CamRight => "right of",
            CamCloser => "closer to the camera than",
            CamFarther => "farther from the camera than",
        }
    }

    /// Short answer-option text for horizontal labels.
    pub fn option_text(self) -> &'static str {
        use RelationLabel::*;
        match self {
            Front => "front",
            Back => "back",
            Left => "left",
            Right => "right",
            FrontLeft => "front-left",
            FrontRight => "front-right",
            BackLeft => "back-left",
            BackRight => "back-right",
            On => "on",
            Under => "under",
            CamLeft => "left",
            CamRight => "right",
            CamCloser => "closer",
            CamFarther => "farther",
        }
    }
}

/// Horizontal direction of `other` in the frame of a reference pose.
///
/// The normalized horizontal displacement is projected on the reference's
/// forward and right axes; components with magnitude `< epsilon` are zeroed.
/// Returns `None` for coincident horizontal positions.
pub fn object_centric_label(reference: &Pose3, other: Vec3, params: &RelationParams) -> Option<RelationLabel> {
    let d = other - reference.position;
    let d = Vec3::new(d.x, d.y, 0.0);
    if d.norm() < 1e-6 {
        return None;
    }
    let d = d / d.norm();
    let f = d.dot(reference.forward());
    let r = d.dot(reference.right());
    let sign = |c: f64| if c.abs() < params.epsilon { 0 } else if c > 0.0 { 1 } else { -1 };
    use RelationLabel::*;
    Some(match (sign(f), sign(r)) {
        (0, 0) => return None,
        (1, 0) => Front,
        (-1, 0) => Back,
        (0, 1) => Right,
        (0, -1) => Left,
        (1, 1) => FrontRight,
        (1, -1) => FrontLeft,
        (-1, 1) => BackRight,
        (-1, -1) => BackLeft,
        _ => unreachable!(),
    })
}

/// Direction of `other` relative to `reference`; `None` when the reference
/// has no defined front or the positions coincide.
pub fn object_centric_relation(reference: &SceneObject, other: &SceneObject, params: &RelationParams) -> Option<RelationLabel> {
    if !reference.has_front || reference.instance_id == other.instance_id {
        return None;
    }
    object_centric_label(&reference.pose, other.pose.position, params)
}

/// `On` when `a` rests on `b`, `Under` when `b` rests on `a`.
pub fn contact_relation(a: &SceneObject, b: &SceneObject, params: &RelationParams) -> Option<RelationLabel> {
    if a.instance_id == b.instance_id {
        return None;
    }
    let (fa, fb) = (a.footprint(), b.footprint());
    let overlap = fa.intersection_area(&fb);
    if overlap < params.contact_overlap_frac * fa.area().min(fb.area()) {
        return None;
    }
    if (a.base_z() - b.top_z()).abs() <= params.contact_gap {
        Some(RelationLabel::On)
    } else if (b.base_z() - a.top_z()).abs() <= params.contact_gap {
        Some(RelationLabel::Under)
    } else {
        None
    }
}

/// Image column and depth of an object's center, or `None` when the center
/// is at or behind the camera plane.
pub fn camera_anchor(camera: &CameraModel, obj: &SceneObject) -> Option<(f64, f64)> {
    let c = camera.to_camera_frame(obj.center());
    if c.z <= NEAR_EPS {
        return None;
    }
    camera.project_camera_frame(c).map(|p| (p.u, p.depth))
}

/// Camera-centric edges between `a` and `b`, both directions, as
/// `(subject, object, label)` with subjects given as `a`/`b` flags
/// (`true` = `a`).
pub fn camera_centric_relations(
    camera: &CameraModel,
    a: &SceneObject,
    b: &SceneObject,
    params: &RelationParams,
) -> Result<Vec<(bool, RelationLabel)>, RelationError> {
    let (ua, da) = camera_anchor(camera, a).ok_or_else(|| RelationError::OutOfFrustum(a.instance_id.clone()))?;
    let (ub, db) = camera_anchor(camera, b).ok_or_else(|| RelationError::OutOfFrustum(b.instance_id.clone()))?;
    let mut out = Vec::new();
    if ua < ub - params.cam_u_dead_zone {
        out.push((true, RelationLabel::CamLeft));
        out.push((false, RelationLabel::CamRight));
    } else if ub < ua - params.cam_u_dead_zone {
        out.push((true, RelationLabel::CamRight));
        out.push((false, RelationLabel::CamLeft));
    }
    if da < db - params.cam_depth_dead_zone {
        out.push((true, RelationLabel::CamCloser));
        out.push((false, RelationLabel::CamFarther));
    } else if db < da - params.cam_depth_dead_zone {
        out.push((true, RelationLabel::CamFarther));
        out.push((false, RelationLabel::CamCloser));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::testing::box_object;

    fn at_angle(deg: f64) -> Vec3 {
        let a = deg.to_radians();
        // measured from forward (+x) toward right (−y)
        Vec3::new(a.cos(), -a.sin(), 0.0) * 2.0
    }

    #[test]
    fn cardinal_and_epsilon_fixtures() {
        let p = RelationParams::default();
        let r = Pose3::new(Vec3::ZERO, 0.0);
        assert_eq!(object_centric_label(&r, Vec3::new(2.0, 0.0, 0.0), &p), Some(RelationLabel::Front));
        // lateral cosine 0.05 is zeroed
        let d = Vec3::new((1.0f64 - 0.05 * 0.05).sqrt(), -0.05, 0.0);
        assert_eq!(object_centric_label(&r, d, &p), Some(RelationLabel::Front));
        assert_eq!(object_centric_label(&r, at_angle(45.0), &p), Some(RelationLabel::FrontRight));
        assert_eq!(object_centric_label(&r, at_angle(90.0), &p), Some(RelationLabel::Right));
        assert_eq!(object_centric_label(&r, at_angle(-135.0), &p), Some(RelationLabel::BackLeft));
        assert_eq!(object_centric_label(&r, Vec3::new(0.0, 0.0, 3.0), &p), None);
    }

    #[test]
    fn boundary_equality_keeps_component() {
        let p = RelationParams { epsilon: 0.5, ..Default::default() };
        let r = Pose3::new(Vec3::ZERO, 0.0);
        // r = -sin(30°) = -0.5 exactly in binary
        let d = Vec3::new(0.75f64.sqrt(), 0.5, 0.0);
        assert_eq!(object_centric_label(&r, d, &p), Some(RelationLabel::FrontLeft));
        let d = Vec3::new(0.75f64.sqrt(), 0.4999, 0.0);
        assert_eq!(object_centric_label(&r, d, &p), Some(RelationLabel::Front));
    }

    #[test]
    fn antisymmetry_and_quarter_turns() {
        let p = RelationParams::default();
        for k in 0..720 {
            let deg = k as f64 * 0.5 + 0.25;
            let yaw = (k as f64 * 0.37).sin() * 3.0;
            let r = Pose3::new(Vec3::new(1.0, -2.0, 0.0), yaw);
            let d = at_angle(deg).rotate_z(yaw);
            let l = object_centric_label(&r, r.position + d, &p).unwrap();
            assert_eq!(object_centric_label(&r, r.position - d, &p), Some(l.inverse()));
            let turned = Pose3::new(r.position, yaw + std::f64::consts::FRAC_PI_2);
            assert_eq!(object_centric_label(&turned, r.position + d, &p), Some(l.rotate_reference(1)));
            let shifted = Pose3::new(r.position + Vec3::new(5.0, 7.0, 1.0), yaw);
            assert_eq!(object_centric_label(&shifted, r.position + d + Vec3::new(5.0, 7.0, 1.0), &p), Some(l));
        }
        assert_eq!(RelationLabel::Front.rotate_reference(1), RelationLabel::Right);
        assert_eq!(RelationLabel::Left.rotate_reference(1), RelationLabel::Front);
    }

    #[test]
    fn contact_fixtures() {
        let p = RelationParams::default();
        let table = box_object("table", (0.0, 0.0, 0.0), (1.0, 1.0, 0.75), 0.0);
        let cup = box_object("cup", (0.1, 0.1, 0.75), (0.1, 0.1, 0.1), 0.0);
        assert_eq!(contact_relation(&cup, &table, &p), Some(RelationLabel::On));
        assert_eq!(contact_relation(&table, &cup, &p), Some(RelationLabel::Under));
        let floating = box_object("cup", (0.1, 0.1, 1.25), (0.1, 0.1, 0.1), 0.0);
        assert_eq!(contact_relation(&floating, &table, &p), None);

        // 1×1 lower box; upper box 1×1 shifted along x so overlap is 30% / 20%
        let lower = box_object("lo", (0.0, 0.0, 0.0), (1.0, 1.0, 1.0), 0.0);
        let up30 = box_object("up", (0.7, 0.0, 1.0), (1.0, 1.0, 1.0), 0.0);
        let up20 = box_object("up", (0.8, 0.0, 1.0), (1.0, 1.0, 1.0), 0.0);
        assert_eq!(contact_relation(&up30, &lower, &p), Some(RelationLabel::On));
        assert_eq!(contact_relation(&up20, &lower, &p), None);
    }

    #[test]
    fn camera_centric_dead_zones() {
        let p = RelationParams::default();
        let cam = CameraModel::new(Vec3::new(-10.0, 0.0, 0.5), 0.0, 0.0, 90f64.to_radians(), 1024, 768).unwrap();
        let a = box_object("a", (0.0, 3.0, 0.0), (0.5, 0.5, 1.0), 0.0);
        let b = box_object("b", (0.0, -3.0, 0.0), (0.5, 0.5, 1.0), 0.0);
        let r = camera_centric_relations(&cam, &a, &b, &p).unwrap();
        assert_eq!(r, vec![(true, RelationLabel::CamLeft), (false, RelationLabel::CamRight)]);
        let c = box_object("c", (0.005, -3.0, 0.0), (0.5, 0.5, 1.0), 0.0);
        let r = camera_centric_relations(&cam, &b, &c, &p).unwrap();
        assert!(r.is_empty(), "{r:?}");
        let behind = box_object("z", (-20.0, 0.0, 0.0), (0.5, 0.5, 1.0), 0.0);
        assert!(camera_centric_relations(&cam, &a, &behind, &p).is_err());
    }
}
