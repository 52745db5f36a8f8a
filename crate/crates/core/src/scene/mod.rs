//! Theme-driven scene synthesis: rejection sampling of object layouts under
//! placement and anchor constraints, plus an independent validator.
//!
//! Instance ids have the form `{category}.{spec_index}.{k}`; the validator
//! uses them to find the spec an object was generated from.

mod resolved;
mod sample;
mod theme;
mod validate;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::Pose3;

pub use resolved::{ResolvedScene, SceneObject, Shape};
pub use sample::{sample_scene, validate_theme};
pub use theme::{AnchorLabel, AnchorRelation, CountSpec, FloorSpec, Lighting, ObjectSpec, Placement, ThemeConfig};
pub use validate::{anchor_relation_satisfied, validate_scene, SceneViolation, ViolationKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("invalid theme `{theme}`: {reason}")]
    InvalidTheme { theme: String, reason: String },
    #[error("spec {spec} ({category}) unsatisfiable: {instance_id} not placed after {attempts} attempts")]
    ConstraintUnsatisfiable { spec: usize, category: String, instance_id: String, attempts: u32 },
    #[error("object `{instance_id}` references unknown asset `{asset_id}`")]
    UnknownAsset { instance_id: String, asset_id: String },
    #[error("asset error: {0}")]
    Asset(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedObject {
    pub instance_id: String,
    pub asset_id: String,
    pub pose: Pose3,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneInstance {
    pub scene_id: String,
    pub theme_id: String,
    pub seed: u64,
    pub floor: FloorSpec,
    #[serde(default)]
    pub lighting: Lighting,
    pub objects: Vec<PlacedObject>,
}

impl SceneInstance {
    pub fn to_json(&self) -> String {
        crate::canonical::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> Result<SceneInstance, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SceneError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| SceneError::Io { path: path.display().to_string(), message: e.to_string() })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SceneInstance, SceneError> {
        let path = path.as_ref();
        let io = |m: String| SceneError::Io { path: path.display().to_string(), message: m };
        let text = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
        SceneInstance::from_json(&text).map_err(|e| io(e.to_string()))
    }
}

/// Scene-local fixtures for unit and integration tests.
pub mod testing {
    use std::collections::BTreeSet;

    use super::resolved::bounding_box_of;
    use super::*;
    use crate::geometry::Vec3;

    /// Box object with `size = (width, depth, height)` whose base center is
    /// at `pos`. Has a front.
    pub fn box_object(id: &str, pos: (f64, f64, f64), size: (f64, f64, f64), yaw: f64) -> SceneObject {
        let pose = Pose3::new(Vec3::new(pos.0, pos.1, pos.2), yaw);
        let b = bounding_box_of(&pose, size);
        SceneObject {
            instance_id: id.into(),
            asset_id: id.into(),
            category: id.into(),
            display_name: id.into(),
            has_front: true,
            tags: BTreeSet::new(),
            pose,
            scale: 1.0,
            size,
            shape: Shape::Box(b),
            aabb: b.aabb(),
            code: 1,
        }
    }

    /// Wraps objects into a resolved scene on a `floor` × `floor` m floor,
    /// renumbering instance codes.
    pub fn resolved(objects: Vec<SceneObject>, floor: f64) -> ResolvedScene {
        let objects: Vec<SceneObject> = objects
            .into_iter()
            .enumerate()
            .map(|(i, mut o)| {
                o.code = i as u32 + 1;
                o
            })
            .collect();
        let scene = SceneInstance {
            scene_id: "fixture".into(),
            theme_id: "fixture".into(),
            seed: 0,
            floor: FloorSpec { extent: [floor, floor], material_tag: "none".into() },
            lighting: Lighting::default(),
            objects: objects
                .iter()
                .map(|o| PlacedObject { instance_id: o.instance_id.clone(), asset_id: o.asset_id.clone(), pose: o.pose, scale: 1.0 })
                .collect(),
        };
        ResolvedScene { scene, objects }
    }
}
