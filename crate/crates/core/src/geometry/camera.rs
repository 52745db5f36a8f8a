use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::{GeometryError, Ray, Vec3};

/// Points at or closer than this depth (meters along the optical axis) are
/// treated as behind the camera.
pub const NEAR_EPS: f64 = 1e-6;

/// Pinhole camera with yaw and pitch only (no roll), square pixels.
///
/// Pixel `u` grows to the right and `v` grows downward; the principal point
/// is the image center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub position: Vec3,
    pub yaw: f64,
    pub pitch: f64,
    pub fov_x: f64,
    pub width: u32,
    pub height: u32,
}

/// Result of projecting a world point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

impl CameraModel {
    pub fn new(
        position: Vec3,
        yaw: f64,
        pitch: f64,
        fov_x: f64,
        width: u32,
        height: u32,
    ) -> Result<Self, GeometryError> {
        let cam = CameraModel { position, yaw, pitch, fov_x, width, height };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !self.position.is_finite() || !self.yaw.is_finite() || !self.pitch.is_finite() {
            return Err(GeometryError::InvalidCamera("non-finite pose".into()));
        }
        // Nadir (-π/2) is allowed: the right axis is derived from yaw alone.
        if self.pitch < -FRAC_PI_2 - 1e-12 || self.pitch > FRAC_PI_2 + 1e-12 {
            return Err(GeometryError::InvalidCamera(format!("pitch {} out of range", self.pitch)));
        }
        if !(self.fov_x > 0.0 && self.fov_x < std::f64::consts::PI) {
            return Err(GeometryError::InvalidCamera(format!("fov_x {} out of (0, π)", self.fov_x)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(GeometryError::InvalidCamera("zero image size".into()));
        }
        Ok(())
    }

    pub fn forward(&self) -> Vec3 {
        let (sp, cp) = self.pitch.sin_cos();
        let (sy, cy) = self.yaw.sin_cos();
        Vec3::new(cp * cy, cp * sy, sp)
    }

    pub fn right(&self) -> Vec3 {
        Vec3::new(self.yaw.sin(), -self.yaw.cos(), 0.0)
    }

    pub fn up(&self) -> Vec3 {
        self.right().cross(self.forward())
    }

    /// Focal length in pixels (identical on both axes).
    pub fn focal(&self) -> f64 {
        (self.width as f64 / 2.0) / (self.fov_x / 2.0).tan()
    }

    pub fn fov_y(&self) -> f64 {
        2.0 * ((self.fov_x / 2.0).tan() * self.height as f64 / self.width as f64).atan()
    }

    /// Camera-frame coordinates: (right, up, depth).
    pub fn to_camera_frame(&self, p: Vec3) -> Vec3 {
        let d = p - self.position;
        Vec3::new(d.dot(self.right()), d.dot(self.up()), d.dot(self.forward()))
    }

    pub fn project_camera_frame(&self, c: Vec3) -> Option<Projection> {
        if c.z <= NEAR_EPS {
            return None;
        }
        let f = self.focal();
        Some(Projection {
            u: self.width as f64 / 2.0 + f * c.x / c.z,
            v: self.height as f64 / 2.0 - f * c.y / c.z,
            depth: c.z,
        })
    }

    /// Pixel coordinates and depth of `p`, or `None` when `p` is at or behind
    /// the camera plane.
    pub fn project_point(&self, p: Vec3) -> Option<Projection> {
        self.project_camera_frame(self.to_camera_frame(p))
    }

    pub fn in_image(&self, u: f64, v: f64) -> bool {
        (0.0..=self.width as f64).contains(&u) && (0.0..=self.height as f64).contains(&v)
    }

    /// Primary ray through image coordinates `(u, v)`.
    pub fn ray_through(&self, u: f64, v: f64) -> Ray {
        let f = self.focal();
        let x = (u - self.width as f64 / 2.0) / f;
        let y = (self.height as f64 / 2.0 - v) / f;
        let dir = self.right() * x + self.up() * y + self.forward();
        Ray::new(self.position, dir).expect("camera basis is orthonormal")
    }

    /// Primary ray through the center of pixel `(px, py)`.
    pub fn pixel_ray(&self, px: u32, py: u32) -> Ray {
        self.ray_through(px as f64 + 0.5, py as f64 + 0.5)
    }
}

/// Free-function form of [`CameraModel::project_point`].
pub fn project_point(camera: &CameraModel, p: Vec3) -> Option<Projection> {
    camera.project_point(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn cam(yaw: f64, pitch: f64, fov: f64) -> CameraModel {
        CameraModel::new(Vec3::ZERO, yaw, pitch, fov, 1024, 768).unwrap()
    }

    /// Homogeneous 3x4 projection built from an explicit rotation matrix.
    fn matrix_oracle(c: &CameraModel, p: Vec3) -> Option<(f64, f64, f64)> {
        let (sy, cy) = c.yaw.sin_cos();
        let (sp, cp) = c.pitch.sin_cos();
        // rows: right, down, forward
        let r = [
            [sy, -cy, 0.0],
            [cy * sp, sy * sp, -cp],
            [cp * cy, cp * sy, sp],
        ];
        let f = (c.width as f64 / 2.0) / (c.fov_x / 2.0).tan();
        let k = [
            [f, 0.0, c.width as f64 / 2.0],
            [0.0, f, c.height as f64 / 2.0],
            [0.0, 0.0, 1.0],
        ];
        let d = [p.x - c.position.x, p.y - c.position.y, p.z - c.position.z];
        let mut cam = [0.0; 3];
        for i in 0..3 {
            cam[i] = (0..3).map(|j| r[i][j] * d[j]).sum();
        }
        let mut h = [0.0; 3];
        for i in 0..3 {
            h[i] = (0..3).map(|j| k[i][j] * cam[j]).sum();
        }
        if cam[2] <= NEAR_EPS {
            return None;
        }
        Some((h[0] / h[2], h[1] / h[2], cam[2]))
    }

    #[test]
    fn optical_axis_projects_to_center() {
        let c = cam(0.7, -0.3, 1.2);
        let p = c.position + c.forward() * 5.0;
        let pr = c.project_point(p).unwrap();
        assert!((pr.u - 512.0).abs() < 1e-9);
        assert!((pr.v - 384.0).abs() < 1e-9);
        assert!((pr.depth - 5.0).abs() < 1e-12);
    }

    #[test]
    fn behind_camera_is_absent() {
        let c = cam(0.0, 0.0, 1.0);
        assert!(c.project_point(Vec3::new(-1.0, 0.0, 0.0)).is_none());
        assert!(c.project_point(Vec3::new(0.0, 3.0, 0.0)).is_none());
    }

    #[test]
    fn right_offset_at_unit_depth_hits_edge_for_90_degrees() {
        let c = cam(0.0, 0.0, 2.0 * FRAC_PI_4);
        // right axis at yaw 0 is -y
        let pr = c.project_point(Vec3::new(1.0, -1.0, 0.0)).unwrap();
        assert!((pr.u - 1024.0).abs() < 1e-9);
        assert!((pr.v - 384.0).abs() < 1e-9);
        let (u, v, d) = matrix_oracle(&c, Vec3::new(1.0, -1.0, 0.0)).unwrap();
        assert!((pr.u - u).abs() < 1e-9 && (pr.v - v).abs() < 1e-9 && (pr.depth - d).abs() < 1e-12);
    }

    #[test]
    fn matches_matrix_oracle_on_random_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let c = CameraModel::new(
                Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(0.0..10.0)),
                rng.gen_range(-3.1..3.1),
                rng.gen_range(-1.57..1.57),
                rng.gen_range(0.3..2.5),
                640,
                480,
            )
            .unwrap();
            let p = Vec3::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0), rng.gen_range(-2.0..5.0));
            match (c.project_point(p), matrix_oracle(&c, p)) {
                (Some(a), Some((u, v, d))) => {
                    assert!((a.u - u).abs() < 1e-6 * (1.0 + u.abs()));
                    assert!((a.v - v).abs() < 1e-6 * (1.0 + v.abs()));
                    assert!((a.depth - d).abs() < 1e-9);
                }
                (None, None) => {}
                other => panic!("disagreement {other:?}"),
            }
        }
    }

    #[test]
    fn pixel_ray_reprojects_to_pixel_center() {
        let c = cam(1.0, -0.5, 1.4);
        let r = c.pixel_ray(100, 700);
        let pr = c.project_point(r.at(3.0)).unwrap();
        assert!((pr.u - 100.5).abs() < 1e-9 && (pr.v - 700.5).abs() < 1e-9);
    }

    #[test]
    fn nadir_pitch_is_valid() {
        let c = cam(0.0, -std::f64::consts::FRAC_PI_2, 1.0);
        assert!((c.forward() - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-12);
        assert!(CameraModel::new(Vec3::ZERO, 0.0, -1.6, 1.0, 10, 10).is_err());
        assert!(CameraModel::new(Vec3::ZERO, 0.0, 0.0, 3.2, 10, 10).is_err());
    }
}
