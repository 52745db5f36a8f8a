//! Small hand-built scenes with known occlusion behavior.

use std::sync::Arc;

use crate::geometry::{CameraModel, TriMesh, Vec3};
use crate::scene::testing::{box_object, resolved};
use crate::scene::{ResolvedScene, Shape};

fn camera_looking_back_from(x: f64, z: f64) -> CameraModel {
    CameraModel::new(Vec3::new(x, 0.0, z), std::f64::consts::PI, 0.0, 90f64.to_radians(), 1024, 768).expect("valid camera")
}

/// Unit box `target` at the origin (base on z = 0) seen from (10, 0, 0.5)
/// looking along −x. With `Some(y0)`, a thin opaque plane at x = 2 covers
/// every y ≥ y0.
pub fn half_cover(y0: Option<f64>) -> (ResolvedScene, CameraModel) {
    let mut objects = vec![box_object("target", (0.0, 0.0, 0.0), (1.0, 1.0, 1.0), 0.0)];
    if let Some(y0) = y0 {
        objects.push(box_object("occluder", (2.0, y0 + 10.0, -10.0), (20.0, 1e-3, 30.0), 0.0));
    }
    (resolved(objects, 100.0), camera_looking_back_from(10.0, 0.5))
}

/// Closed-form blocked fraction for [`half_cover`]: only the +x face faces
/// the camera, and a face point at lateral offset y crosses the plane at
/// y · 8 / 9.5, so points with y ≥ 9.5·y0/8 are blocked.
pub fn half_cover_expected(y0: f64) -> f64 {
    (0.5 - 9.5 * y0 / 8.0).clamp(0.0, 1.0)
}

/// Three boxes in a row toward the camera, each partly behind the previous.
/// Ordered front, middle, back.
pub fn occlusion_chain() -> (ResolvedScene, CameraModel, [&'static str; 3]) {
    let objects = vec![
        box_object("front", (5.0, 0.35, 0.0), (0.6, 0.4, 1.0), 0.0),
        box_object("middle", (2.5, 0.0, 0.0), (1.2, 0.4, 1.2), 0.0),
        box_object("back", (0.0, -0.2, 0.0), (1.6, 0.4, 1.4), 0.0),
    ];
    (resolved(objects, 100.0), camera_looking_back_from(12.0, 0.8), ["front", "middle", "back"])
}

/// Target box with the first `k` of a sequence of occluders between it and
/// the camera; each occluder adds coverage.
pub fn nested_occluders(k: usize) -> (ResolvedScene, CameraModel) {
    let occ = [
        box_object("occ0", (3.0, 0.4, 0.0), (0.4, 0.05, 0.6), 0.0),
        box_object("occ1", (5.0, -0.3, 0.3), (0.3, 0.05, 0.5), 0.2),
        box_object("occ2", (7.0, 0.0, 0.0), (0.2, 0.05, 2.0), -0.3),
        box_object("occ3", (4.0, 0.0, 0.9), (2.0, 0.05, 0.3), 0.0),
    ];
    let mut objects = vec![box_object("target", (0.0, 0.0, 0.0), (1.0, 1.0, 1.0), 0.0)];
    objects.extend(occ.into_iter().take(k));
    (resolved(objects, 100.0), camera_looking_back_from(10.0, 0.5))
}

/// Octahedral mesh target partly behind a box.
pub fn mesh_behind_box() -> (ResolvedScene, CameraModel) {
    let v = vec![
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(0.5, 0.0, 0.6),
        Vec3::new(0.0, 0.5, 0.6),
        Vec3::new(-0.5, 0.0, 0.6),
        Vec3::new(0.0, -0.5, 0.6),
        Vec3::new(0.0, 0.0, 1.2),
    ];
    let t = vec![[0, 2, 1], [0, 3, 2], [0, 4, 3], [0, 1, 4], [5, 1, 2], [5, 2, 3], [5, 3, 4], [5, 4, 1]];
    let mesh = TriMesh::new(v, t).expect("valid octahedron");
    let mut target = box_object("target", (0.0, 0.0, 0.0), (1.0, 1.0, 1.2), 0.0);
    target.aabb = mesh.aabb();
    target.shape = Shape::Mesh(Arc::new(mesh));
    let blocker = box_object("blocker", (3.0, 0.3, 0.0), (0.5, 0.2, 0.9), 0.0);
    (resolved(vec![target, blocker], 100.0), camera_looking_back_from(9.0, 0.9))
}
