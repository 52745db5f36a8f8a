use serde::{Deserialize, Serialize};

use super::camera::NEAR_EPS;
use super::{CameraModel, OrientedBox, Pose3, TriMesh, Vec3};

/// Axis-aligned pixel rectangle. Zero-area boxes (points, lines) are legal.
///
/// Serialized as `[x_min, y_min, x_max, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Bbox2 {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl From<[f64; 4]> for Bbox2 {
    fn from(a: [f64; 4]) -> Self {
        Bbox2 { x_min: a[0], y_min: a[1], x_max: a[2], y_max: a[3] }
    }
}

impl From<Bbox2> for [f64; 4] {
    fn from(b: Bbox2) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

impl Bbox2 {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Bbox2 { x_min, y_min, x_max, y_max }
    }

    pub fn is_valid(&self) -> bool {
        [self.x_min, self.y_min, self.x_max, self.y_max].iter().all(|v| v.is_finite())
            && self.x_min <= self.x_max
            && self.y_min <= self.y_max
    }

    pub fn width(&self) -> f64 {
        (self.x_max - self.x_min).max(0.0)
    }

    pub fn height(&self) -> f64 {
        (self.y_max - self.y_min).max(0.0)
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }

    pub fn intersection(&self, o: &Bbox2) -> Option<Bbox2> {
        let b = Bbox2::new(
            self.x_min.max(o.x_min),
            self.y_min.max(o.y_min),
            self.x_max.min(o.x_max),
            self.y_max.min(o.y_max),
        );
        b.is_valid().then_some(b)
    }

    pub fn clip(&self, width: f64, height: f64) -> Option<Bbox2> {
        self.intersection(&Bbox2::new(0.0, 0.0, width, height))
    }

    pub fn dilate(&self, px: f64) -> Bbox2 {
        Bbox2::new(self.x_min - px, self.y_min - px, self.x_max + px, self.y_max + px)
    }

    pub fn contains_point(&self, u: f64, v: f64) -> bool {
        (self.x_min..=self.x_max).contains(&u) && (self.y_min..=self.y_max).contains(&v)
    }

    pub fn contains(&self, o: &Bbox2) -> bool {
        o.x_min >= self.x_min && o.y_min >= self.y_min && o.x_max <= self.x_max && o.y_max <= self.y_max
    }

    pub fn enclosing(points: impl IntoIterator<Item = (f64, f64)>) -> Option<Bbox2> {
        points.into_iter().fold(None, |acc, (u, v)| {
            Some(match acc {
                None => Bbox2::new(u, v, u, v),
                Some(b) => Bbox2::new(b.x_min.min(u), b.y_min.min(v), b.x_max.max(u), b.y_max.max(v)),
            })
        })
    }
}

/// Intersection over union in `[0, 1]`.
///
/// When the union has zero area the result is 1 for identical boxes and 0
/// otherwise.
pub fn iou(a: &Bbox2, b: &Bbox2) -> f64 {
    let inter = a.intersection(b).map_or(0.0, |i| i.area());
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Geometry accepted by [`project_box_to_bbox2`].
#[derive(Debug, Clone, Copy)]
pub enum ProjectedShape<'a> {
    Box(&'a OrientedBox),
    /// Mesh in its local frame, placed by pose and uniform scale.
    Mesh { mesh: &'a TriMesh, pose: &'a Pose3, scale: f64 },
    /// Mesh already in world coordinates.
    WorldMesh(&'a TriMesh),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedBbox {
    /// Extent clipped to the image.
    pub bbox: Bbox2,
    /// Tight extent before clipping.
    pub unclipped: Bbox2,
    /// True when the unclipped extent exceeded the image bounds.
    pub clipped: bool,
}

/// Tight pixel bounds of a shape's projection, clipped to the image.
///
/// Edges crossing the near plane contribute their crossing point, so the
/// result encloses every projected surface point even for shapes that
/// straddle the camera plane. Returns `None` when nothing projects in front
/// of the camera or the projection misses the image entirely.
pub fn project_box_to_bbox2(camera: &CameraModel, shape: ProjectedShape<'_>) -> Option<ProjectedBbox> {
    let (verts, edges): (Vec<Vec3>, Vec<(usize, usize)>) = match shape {
        ProjectedShape::Box(b) => (b.corners().to_vec(), OrientedBox::EDGES.to_vec()),
        ProjectedShape::Mesh { mesh, pose, scale } => {
            let world = mesh.transformed(pose, scale);
            let edges = mesh_edges(mesh);
            (world.vertices, edges)
        }
        ProjectedShape::WorldMesh(mesh) => (mesh.vertices.clone(), mesh_edges(mesh)),
    };
    let cam: Vec<Vec3> = verts.iter().map(|&p| camera.to_camera_frame(p)).collect();
    let near = NEAR_EPS * 2.0;
    let mut pts: Vec<(f64, f64)> = cam
        .iter()
        .filter_map(|&c| camera.project_camera_frame(c))
        .map(|p| (p.u, p.v))
        .collect();
    if pts.is_empty() {
        return None;
    }
    for &(i, j) in &edges {
        let (a, b) = (cam[i], cam[j]);
        if (a.z > near) != (b.z > near) {
            let t = (near - a.z) / (b.z - a.z);
            let c = a + (b - a) * t;
            if let Some(p) = camera.project_camera_frame(Vec3::new(c.x, c.y, near)) {
                pts.push((p.u, p.v));
            }
        }
    }
    let unclipped = Bbox2::enclosing(pts)?;
    let (w, h) = (camera.width as f64, camera.height as f64);
    let bbox = unclipped.clip(w, h)?;
    let clipped = bbox != unclipped;
    Some(ProjectedBbox { bbox, unclipped, clipped })
}

fn mesh_edges(mesh: &TriMesh) -> Vec<(usize, usize)> {
    let mut e: Vec<(usize, usize)> = mesh
        .triangles
        .iter()
        .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    e.sort_unstable();
    e.dedup();
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn iou_fixtures() {
        let a = Bbox2::new(0.0, 0.0, 2.0, 2.0);
        let b = Bbox2::new(1.0, 1.0, 3.0, 3.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert!((iou(&a, &b) - 1.0 / 7.0).abs() < 1e-12);
        assert_eq!(iou(&a, &Bbox2::new(5.0, 5.0, 6.0, 6.0)), 0.0);
        let pt = Bbox2::new(1.0, 1.0, 1.0, 1.0);
        assert_eq!(iou(&pt, &pt), 1.0);
        assert_eq!(iou(&pt, &a), 0.0);
        assert_eq!(iou(&pt, &Bbox2::new(2.0, 2.0, 2.0, 2.0)), 0.0);
    }

    fn arb_box() -> impl Strategy<Value = Bbox2> {
        (0.0..100.0f64, 0.0..100.0f64, 0.1..50.0f64, 0.1..50.0f64)
            .prop_map(|(x, y, w, h)| Bbox2::new(x, y, x + w, y + h))
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let x = iou(&a, &b);
            prop_assert!((x - iou(&b, &a)).abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&x));
            prop_assert!((iou(&a, &a) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn iou_monotone_under_shrinking_overlap(a in arb_box(), shift in 0.0..10.0f64) {
            let b = Bbox2::new(a.x_min + shift, a.y_min, a.x_max + shift, a.y_max);
            let c = Bbox2::new(a.x_min + shift + 1.0, a.y_min, a.x_max + shift + 1.0, a.y_max);
            prop_assert!(iou(&a, &c) <= iou(&a, &b) + 1e-12);
        }
    }

    fn cam() -> CameraModel {
        CameraModel::new(Vec3::new(-6.0, 0.0, 0.0), 0.0, 0.0, 1.2, 1024, 768).unwrap()
    }

    #[test]
    fn box_behind_is_absent() {
        let b = OrientedBox::new(Vec3::new(-10.0, 0.0, 0.0), Vec3::new(0.5, 0.5, 0.5), 0.0).unwrap();
        assert!(project_box_to_bbox2(&cam(), ProjectedShape::Box(&b)).is_none());
    }

    #[test]
    fn centered_box_is_symmetric() {
        let b = OrientedBox::new(Vec3::ZERO, Vec3::new(0.5, 0.5, 0.5), 0.0).unwrap();
        let p = project_box_to_bbox2(&cam(), ProjectedShape::Box(&b)).unwrap();
        let (u, v) = p.bbox.center();
        assert!((u - 512.0).abs() < 1e-6 && (v - 384.0).abs() < 1e-6);
        assert!(!p.clipped);
    }

    #[test]
    fn general_pose_matches_corner_enumeration() {
        let c = CameraModel::new(Vec3::new(-4.0, 1.0, 3.0), 0.2, -0.5, 1.4, 800, 600).unwrap();
        let b = OrientedBox::new(Vec3::new(1.0, 0.5, 0.4), Vec3::new(0.4, 0.7, 0.4), 0.9).unwrap();
        let p = project_box_to_bbox2(&c, ProjectedShape::Box(&b)).unwrap();
        let xs: Vec<(f64, f64)> = b
            .corners()
            .iter()
            .map(|&q| {
                let pr = c.project_point(q).unwrap();
                (pr.u, pr.v)
            })
            .collect();
        let want = Bbox2::enclosing(xs).unwrap();
        assert!((p.unclipped.x_min - want.x_min).abs() < 1e-9);
        assert!((p.unclipped.y_max - want.y_max).abs() < 1e-9);
        assert_eq!(p.unclipped, want);
    }

    #[test]
    fn straddling_box_encloses_surface_samples() {
        let c = CameraModel::new(Vec3::new(0.0, 0.0, 1.0), 0.0, 0.0, 1.5, 640, 480).unwrap();
        let b = OrientedBox::new(Vec3::new(0.5, 0.3, 1.0), Vec3::new(1.0, 0.5, 0.5), 0.3).unwrap();
        let p = project_box_to_bbox2(&c, ProjectedShape::Box(&b)).unwrap();
        for f in b.faces() {
            for i in 0..20 {
                for j in 0..20 {
                    let q = f.point(i as f64 / 19.0, j as f64 / 19.0);
                    if let Some(pr) = c.project_point(q) {
                        if c.in_image(pr.u, pr.v) {
                            assert!(p.bbox.dilate(0.5).contains_point(pr.u, pr.v));
                        }
                    }
                }
            }
        }
    }
}
