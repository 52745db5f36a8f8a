use std::collections::BTreeSet;
use std::sync::Arc;

use crate::assets::{AssetLibrary, AssetShape};
use crate::geometry::{ray_intersect_box, Aabb, Footprint, OrientedBox, Ray, TriMesh, Vec3};

use super::{PlacedObject, SceneError, SceneInstance};

/// World-space geometry of one object.
#[derive(Debug, Clone)]
pub enum Shape {
    Box(OrientedBox),
    Mesh(Arc<TriMesh>),
}

/// A placed object joined with its asset record.
#[derive(Debug, Clone)]
pub struct SceneObject {
    pub instance_id: String,
    pub asset_id: String,
    pub category: String,
    pub display_name: String,
    pub has_front: bool,
    pub tags: BTreeSet<String>,
    pub pose: crate::geometry::Pose3,
    pub scale: f64,
    /// Scaled (width, depth, height), meters.
    pub size: (f64, f64, f64),
    pub shape: Shape,
    pub aabb: Aabb,
    /// 1-based id used in instance maps.
    pub code: u32,
}

impl SceneObject {
    pub fn base_z(&self) -> f64 {
        self.pose.position.z
    }

    pub fn top_z(&self) -> f64 {
        self.pose.position.z + self.size.2
    }

    /// Center of the object's bounding volume.
    pub fn center(&self) -> Vec3 {
        self.pose.position + Vec3::new(0.0, 0.0, self.size.2 / 2.0)
    }

    pub fn footprint(&self) -> Footprint {
        footprint_of(&self.pose, self.size)
    }

    /// Bounding box in the object's frame (the exact shape for box assets).
    pub fn bounding_box(&self) -> OrientedBox {
        bounding_box_of(&self.pose, self.size)
    }

    pub fn ray_intersect(&self, ray: &Ray) -> Option<f64> {
        self.aabb.ray_range(ray).filter(|&(_, t1)| t1 >= 0.0)?;
        match &self.shape {
            Shape::Box(b) => ray_intersect_box(ray, b),
            Shape::Mesh(m) => m.ray_intersect(ray),
        }
    }
}

pub(crate) fn footprint_of(pose: &crate::geometry::Pose3, size: (f64, f64, f64)) -> Footprint {
    Footprint::new(pose.position.xy(), (size.1 / 2.0, size.0 / 2.0), pose.yaw)
}

pub(crate) fn bounding_box_of(pose: &crate::geometry::Pose3, size: (f64, f64, f64)) -> OrientedBox {
    OrientedBox {
        center: pose.position + Vec3::new(0.0, 0.0, size.2 / 2.0),
        half_extents: Vec3::new(size.1 / 2.0, size.0 / 2.0, size.2 / 2.0),
        yaw: pose.yaw,
    }
}

/// Scene with every object resolved against the asset library.
#[derive(Debug, Clone)]
pub struct ResolvedScene {
    pub scene: SceneInstance,
    pub objects: Vec<SceneObject>,
}

impl ResolvedScene {
    pub fn new(scene: SceneInstance, lib: &AssetLibrary) -> Result<ResolvedScene, SceneError> {
        let objects = scene
            .objects
            .iter()
            .enumerate()
            .map(|(i, o)| resolve_object(o, lib, i as u32 + 1))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ResolvedScene { scene, objects })
    }

    pub fn scene_id(&self) -> &str {
        &self.scene.scene_id
    }

    pub fn object(&self, instance_id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.instance_id == instance_id)
    }

    pub fn index_of(&self, instance_id: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.instance_id == instance_id)
    }

    /// Nearest hit along the ray as (object index, t).
    pub fn first_hit(&self, ray: &Ray, candidates: Option<&[usize]>) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut check = |i: usize| {
            if let Some(t) = self.objects[i].ray_intersect(ray) {
                if best.is_none_or(|(_, bt)| t < bt) {
                    best = Some((i, t));
                }
            }
        };
        match candidates {
            Some(c) => c.iter().copied().for_each(&mut check),
            None => (0..self.objects.len()).for_each(&mut check),
        }
        best
    }

    /// True when any object intersects the ray strictly before `max_t`.
    pub fn blocked(&self, ray: &Ray, max_t: f64) -> bool {
        self.objects.iter().any(|o| {
            o.aabb.ray_range(ray).is_some_and(|(t0, t1)| t1 >= 0.0 && t0 < max_t)
                && o.ray_intersect(ray).is_some_and(|t| t < max_t)
        })
    }
}

pub(crate) fn resolve_object(o: &PlacedObject, lib: &AssetLibrary, code: u32) -> Result<SceneObject, SceneError> {
    let asset = lib
        .asset(&o.asset_id)
        .ok_or_else(|| SceneError::UnknownAsset { instance_id: o.instance_id.clone(), asset_id: o.asset_id.clone() })?;
    let s = o.scale;
    let size = (asset.dims.width * s, asset.dims.depth * s, asset.dims.height * s);
    let (shape, aabb) = match &asset.shape {
        AssetShape::Box => {
            let b = bounding_box_of(&o.pose, size);
            (Shape::Box(b), b.aabb())
        }
        AssetShape::Mesh { .. } => {
            let mesh = lib
                .mesh(&asset.asset_id)
                .map_err(|e| SceneError::Asset(e.to_string()))?
                .expect("mesh-shaped asset");
            let world = mesh.transformed(&o.pose, s);
            let aabb = world.aabb();
            (Shape::Mesh(Arc::new(world)), aabb)
        }
    };
    Ok(SceneObject {
        instance_id: o.instance_id.clone(),
        asset_id: o.asset_id.clone(),
        category: asset.category.clone(),
        display_name: asset.display_name.clone(),
        has_front: asset.has_front,
        tags: asset.tags.clone(),
        pose: o.pose,
        scale: s,
        size,
        shape,
        aabb,
        code,
    })
}
