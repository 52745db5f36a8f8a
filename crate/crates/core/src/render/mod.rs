//! Camera placement for the four viewpoint families and per-view metadata:
//! clipped 2D boxes, projected 3D box corners, ray-cast occlusion ratios and
//! instance/depth maps.

pub mod fixtures;
mod occlusion;
mod placement;
mod raster;

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{project_box_to_bbox2, Bbox2, CameraModel, ProjectedShape};
use crate::scene::{ResolvedScene, SceneObject, Shape};
use crate::seed_path;

pub use occlusion::{compute_occlusion, surface_samples, SurfaceSample};
pub use placement::{place_cameras, ClassSpec, Coverage, FovPreset, ViewSpec, ViewpointClass};
pub use raster::{render_instance_map, InstanceMap};

pub const DEFAULT_N_RAYS: usize = 1024;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error("invalid view spec: {0}")]
    InvalidSpec(String),
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("n_rays must be at least 1")]
    NoRays,
    #[error("no task objects given")]
    EmptyTaskObjects,
    #[error("no metadata for `{instance_id}` in view `{view_id}`")]
    MissingMetadata { instance_id: String, view_id: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewRecord {
    pub view_id: String,
    pub class: ViewpointClass,
    pub camera: CameraModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectViewMetadata {
    pub instance_id: String,
    pub view_id: String,
    /// Projected extent clipped to the image; absent outside the frustum.
    pub bbox2: Option<Bbox2>,
    pub occlusion_ratio: f64,
    pub in_frustum: bool,
    /// Pixel positions of the 8 bounding-box corners (absent when behind the
    /// camera).
    pub projected_3d_corners: Vec<Option<[f64; 2]>>,
}

/// Everything extracted for one scene; the on-disk `metadata.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMetadata {
    pub scene_id: String,
    pub views: Vec<ViewRecord>,
    /// Ordered by view (as listed in `views`), then instance id.
    pub objects: Vec<ObjectViewMetadata>,
}

impl SceneMetadata {
    pub fn get(&self, view_id: &str, instance_id: &str) -> Option<&ObjectViewMetadata> {
        self.objects.iter().find(|m| m.view_id == view_id && m.instance_id == instance_id)
    }

    pub fn view(&self, view_id: &str) -> Option<&ViewRecord> {
        self.views.iter().find(|v| v.view_id == view_id)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RenderError> {
        let path = path.as_ref();
        crate::canonical::write_pretty(path, self).map_err(|e| RenderError::Io { path: path.display().to_string(), message: e.to_string() })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SceneMetadata, RenderError> {
        let path = path.as_ref();
        let io = |m: String| RenderError::Io { path: path.display().to_string(), message: m };
        let text = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| io(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderOptions {
    pub n_rays: usize,
    /// Global seed; ray patterns derive from it per (scene, view, instance).
    pub seed: u64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { n_rays: DEFAULT_N_RAYS, seed: 0 }
    }
}

pub(crate) fn projected_shape(o: &SceneObject) -> ProjectedShape<'_> {
    match &o.shape {
        Shape::Box(b) => ProjectedShape::Box(b),
        Shape::Mesh(m) => ProjectedShape::WorldMesh(m),
    }
}

/// Seed of the occlusion ray pattern for one (scene, view, instance).
pub fn pattern_seed(seed: u64, scene_id: &str, view_id: &str, instance_id: &str) -> u64 {
    crate::seed::derive(seed, seed_path!["occlusion", scene_id, view_id, instance_id])
}

/// One record per scene object, sorted by instance id.
pub fn extract_view_metadata(scene: &ResolvedScene, view: &ViewRecord, opts: &RenderOptions) -> Vec<ObjectViewMetadata> {
    let cam = &view.camera;
    let mut out: Vec<ObjectViewMetadata> = scene
        .objects
        .par_iter()
        .map(|o| {
            let bbox = project_box_to_bbox2(cam, projected_shape(o)).map(|p| p.bbox);
            let in_frustum = bbox.is_some();
            let occlusion_ratio = if in_frustum {
                let ps = pattern_seed(opts.seed, scene.scene_id(), &view.view_id, &o.instance_id);
                compute_occlusion(scene, cam, &o.instance_id, opts.n_rays, ps).expect("object belongs to scene")
            } else {
                1.0
            };
            let projected_3d_corners = o
                .bounding_box()
                .corners()
                .iter()
                .map(|&c| cam.project_point(c).map(|p| [p.u, p.v]))
                .collect();
            ObjectViewMetadata {
                instance_id: o.instance_id.clone(),
                view_id: view.view_id.clone(),
                bbox2: bbox,
                occlusion_ratio,
                in_frustum,
                projected_3d_corners,
            }
        })
        .collect();
    out.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    out
}

/// Places cameras and extracts metadata for every view of a scene.
pub fn extract_scene_metadata(scene: &ResolvedScene, views: Vec<ViewRecord>, opts: &RenderOptions) -> SceneMetadata {
    let objects = views.iter().flat_map(|v| extract_view_metadata(scene, v, opts)).collect();
    crate::canonical::round_trip(&SceneMetadata { scene_id: scene.scene_id().to_string(), views, objects })
}

/// Mean occlusion ratio over every (task object, view) pair.
pub fn key_object_visibility(task_objects: &BTreeSet<String>, metadata: &SceneMetadata, view_ids: &[String]) -> Result<f64, RenderError> {
    if task_objects.is_empty() {
        return Err(RenderError::EmptyTaskObjects);
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in view_ids {
        for id in task_objects {
            let m = metadata
                .get(v, id)
                .ok_or_else(|| RenderError::MissingMetadata { instance_id: id.clone(), view_id: v.clone() })?;
            sum += m.occlusion_ratio;
            n += 1;
        }
    }
    if n == 0 {
        return Err(RenderError::EmptyTaskObjects);
    }
    Ok(sum / n as f64)
}
