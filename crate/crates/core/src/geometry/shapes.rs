use serde::{Deserialize, Serialize};

use super::{GeometryError, Pose3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    direction: Vec3,
}

impl Ray {
    /// Builds a ray, normalizing `direction`.
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Self, GeometryError> {
        let direction = direction.normalized().ok_or(GeometryError::DegenerateRay)?;
        if !origin.is_finite() {
            return Err(GeometryError::DegenerateRay);
        }
        Ok(Ray { origin, direction })
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

/// Axis-aligned bounds, used as a broad phase before exact intersection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn from_points(points: impl IntoIterator<Item = Vec3>) -> Option<Aabb> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let (min, max) = it.fold((first, first), |(lo, hi), p| (lo.min(p), hi.max(p)));
        Some(Aabb { min, max })
    }

    /// Entry/exit parameters of the ray through the slab set, if any.
    pub fn ray_range(&self, ray: &Ray) -> Option<(f64, f64)> {
        slab_range(ray.origin, ray.direction(), self.min, self.max)
    }
}

fn slab_range(o: Vec3, d: Vec3, lo: Vec3, hi: Vec3) -> Option<(f64, f64)> {
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for (oi, di, l, h) in [(o.x, d.x, lo.x, hi.x), (o.y, d.y, lo.y, hi.y), (o.z, d.z, lo.z, hi.z)] {
        if di.abs() < 1e-300 {
            if oi < l || oi > h {
                return None;
            }
            continue;
        }
        let inv = 1.0 / di;
        let (mut a, mut b) = ((l - oi) * inv, (h - oi) * inv);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        t0 = t0.max(a);
        t1 = t1.min(b);
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

/// Box rotated about +z. `half_extents` are along the box's local x, y, z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Vec3,
    pub half_extents: Vec3,
    pub yaw: f64,
}

impl OrientedBox {
    pub fn new(center: Vec3, half_extents: Vec3, yaw: f64) -> Result<Self, GeometryError> {
        if !(half_extents.x > 0.0 && half_extents.y > 0.0 && half_extents.z > 0.0) {
            return Err(GeometryError::NonPositiveExtent);
        }
        Ok(OrientedBox { center, half_extents, yaw })
    }

    pub fn to_local(&self, p: Vec3) -> Vec3 {
        (p - self.center).rotate_z(-self.yaw)
    }

    pub fn to_world(&self, p: Vec3) -> Vec3 {
        self.center + p.rotate_z(self.yaw)
    }

    /// Corners ordered by bit pattern: bit 0 → +x, bit 1 → +y, bit 2 → +z.
    pub fn corners(&self) -> [Vec3; 8] {
        let h = self.half_extents;
        std::array::from_fn(|i| {
            let sx = if i & 1 != 0 { 1.0 } else { -1.0 };
            let sy = if i & 2 != 0 { 1.0 } else { -1.0 };
            let sz = if i & 4 != 0 { 1.0 } else { -1.0 };
            self.to_world(Vec3::new(sx * h.x, sy * h.y, sz * h.z))
        })
    }

    /// The 12 edges as corner index pairs.
    #[rustfmt::skip]
    pub const EDGES: [(usize, usize); 12] = [
        (0, 1), (2, 3), (4, 5), (6, 7),
        (0, 2), (1, 3), (4, 6), (5, 7),
        (0, 4), (1, 5), (2, 6), (3, 7),
    ];

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.corners()).expect("eight corners")
    }

    /// Six faces, each as (outward unit normal, center, half-size along
    /// tangent u, tangent u, half-size along tangent v, tangent v).
    pub fn faces(&self) -> [BoxFace; 6] {
        let h = self.half_extents;
        let ex = Vec3::X.rotate_z(self.yaw);
        let ey = Vec3::Y.rotate_z(self.yaw);
        let ez = Vec3::Z;
        let c = self.center;
        [
            BoxFace { normal: ex, center: c + ex * h.x, u: ey, hu: h.y, v: ez, hv: h.z },
            BoxFace { normal: -ex, center: c - ex * h.x, u: ey, hu: h.y, v: ez, hv: h.z },
            BoxFace { normal: ey, center: c + ey * h.y, u: ex, hu: h.x, v: ez, hv: h.z },
            BoxFace { normal: -ey, center: c - ey * h.y, u: ex, hu: h.x, v: ez, hv: h.z },
            BoxFace { normal: ez, center: c + ez * h.z, u: ex, hu: h.x, v: ey, hv: h.y },
            BoxFace { normal: -ez, center: c - ez * h.z, u: ex, hu: h.x, v: ey, hv: h.y },
        ]
    }

    /// 12-triangle surface with outward (counterclockwise) winding.
    pub fn triangulate(&self) -> TriMesh {
        let vertices = self.corners().to_vec();
        // Quads per face, counterclockwise when seen from outside.
        let quads: [[usize; 4]; 6] = [
            [1, 3, 7, 5], // +x
            [0, 4, 6, 2], // -x
            [2, 6, 7, 3], // +y
            [0, 1, 5, 4], // -y
            [4, 5, 7, 6], // +z
            [0, 2, 3, 1], // -z
        ];
        let triangles = quads
            .iter()
            .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
            .collect();
        TriMesh { vertices, triangles }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        let l = self.to_local(p);
        let h = self.half_extents;
        l.x.abs() <= h.x && l.y.abs() <= h.y && l.z.abs() <= h.z
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxFace {
    pub normal: Vec3,
    pub center: Vec3,
    pub u: Vec3,
    pub hu: f64,
    pub v: Vec3,
    pub hv: f64,
}

impl BoxFace {
    pub fn area(&self) -> f64 {
        4.0 * self.hu * self.hv
    }

    /// Point at face coordinates `(a, b) ∈ [0,1]²`.
    pub fn point(&self, a: f64, b: f64) -> Vec3 {
        self.center + self.u * ((2.0 * a - 1.0) * self.hu) + self.v * ((2.0 * b - 1.0) * self.hv)
    }
}

/// Smallest `t ≥ 0` at which the ray meets the box surface. A ray starting
/// inside the box reports its exit point.
pub fn ray_intersect_box(ray: &Ray, b: &OrientedBox) -> Option<f64> {
    let o = b.to_local(ray.origin);
    let d = ray.direction().rotate_z(-b.yaw);
    let (t0, t1) = slab_range(o, d, -b.half_extents, b.half_extents)?;
    if t1 < 0.0 {
        None
    } else if t0 >= 0.0 {
        Some(t0)
    } else {
        Some(t1)
    }
}

/// Ray/triangle intersection (Möller–Trumbore). Boundary hits count.
pub fn ray_intersect_triangle(ray: &Ray, a: Vec3, b: Vec3, c: Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let d = ray.direction();
    let p = d.cross(e2);
    let det = e1.dot(p);
    let scale = e1.norm() * e2.norm();
    if det.abs() <= 1e-12 * scale {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - a;
    let u = s.dot(p) * inv;
    const TOL: f64 = 1e-9;
    if !(-TOL..=1.0 + TOL).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = d.dot(q) * inv;
    if v < -TOL || u + v > 1.0 + TOL {
        return None;
    }
    let t = e2.dot(q) * inv;
    (t >= 0.0).then_some(t)
}

/// Indexed triangle mesh in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self, GeometryError> {
        let m = TriMesh { vertices, triangles };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.triangles.is_empty() {
            return Err(GeometryError::EmptyMesh);
        }
        for (i, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&k| k >= self.vertices.len()) {
                return Err(GeometryError::IndexOutOfRange { triangle: i });
            }
            if self.triangle_area(i) <= 1e-15 {
                return Err(GeometryError::DegenerateTriangle { triangle: i });
            }
        }
        Ok(())
    }

    pub fn triangle(&self, i: usize) -> (Vec3, Vec3, Vec3) {
        let [a, b, c] = self.triangles[i];
        (self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn triangle_area(&self, i: usize) -> f64 {
        let (a, b, c) = self.triangle(i);
        0.5 * (b - a).cross(c - a).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|i| self.triangle_area(i)).sum()
    }

    /// Mesh placed in the world by an upright pose and a uniform scale.
    pub fn transformed(&self, pose: &Pose3, scale: f64) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|&v| pose.to_world(v * scale)).collect(),
            triangles: self.triangles.clone(),
        }
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter().copied()).expect("validated mesh has vertices")
    }

    pub fn ray_intersect(&self, ray: &Ray) -> Option<f64> {
        (0..self.triangles.len())
            .filter_map(|i| {
                let (a, b, c) = self.triangle(i);
                ray_intersect_triangle(ray, a, b, c)
            })
            .min_by(f64::total_cmp)
    }
}
