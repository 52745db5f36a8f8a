//! Vectors, upright poses, pinhole cameras, ray intersection, projection and
//! 2D box arithmetic.
//!
//! World frame is right-handed with z up; yaw is measured counterclockwise
//! from +x. Everything here is a pure function over plain values.

mod bbox;
mod camera;
mod footprint;
mod shapes;
mod vec;

pub use bbox::{iou, project_box_to_bbox2, Bbox2, ProjectedBbox, ProjectedShape};
pub use camera::{project_point, CameraModel, Projection, NEAR_EPS};
pub use footprint::{convex_intersection_area, polygon_area, Footprint};
pub use shapes::{ray_intersect_box, ray_intersect_triangle, Aabb, BoxFace, OrientedBox, Ray, TriMesh};
pub use vec::{wrap_angle, Pose3, Vec3};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("ray direction must be finite and non-zero")]
    DegenerateRay,
    #[error("box half-extents must be strictly positive")]
    NonPositiveExtent,
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("triangle {triangle} references a vertex out of range")]
    IndexOutOfRange { triangle: usize },
    #[error("triangle {triangle} has zero area")]
    DegenerateTriangle { triangle: usize },
}
