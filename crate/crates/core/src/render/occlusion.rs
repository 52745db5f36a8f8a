use rand::Rng;

use super::RenderError;
use crate::geometry::{CameraModel, Ray, Vec3};
use crate::scene::{ResolvedScene, SceneObject, Shape};

/// Offset applied along the ray to leave the sampled surface.
pub const SELF_OFFSET: f64 = 1e-4;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    pub point: Vec3,
    pub normal: Vec3,
}

/// A planar patch parameterized over the unit square.
enum Patch {
    Quad { origin: Vec3, u: Vec3, v: Vec3, normal: Vec3 },
    Tri { a: Vec3, b: Vec3, c: Vec3, normal: Vec3 },
}

impl Patch {
    fn at(&self, s: f64, t: f64) -> SurfaceSample {
        match *self {
            Patch::Quad { origin, u, v, normal } => SurfaceSample { point: origin + u * s + v * t, normal },
            Patch::Tri { a, b, c, normal } => {
                let r = s.sqrt();
                SurfaceSample { point: a * (1.0 - r) + b * (r * (1.0 - t)) + c * (r * t), normal }
            }
        }
    }
}

/// Camera-facing surface patches with their areas.
fn facing_patches(obj: &SceneObject, eye: Vec3) -> Vec<(Patch, f64)> {
    match &obj.shape {
        Shape::Box(b) => b
            .faces()
            .iter()
            .filter(|f| f.normal.dot(eye - f.center) > 0.0)
            .map(|f| {
                let origin = f.point(0.0, 0.0);
                let patch = Patch::Quad { origin, u: f.u * (2.0 * f.hu), v: f.v * (2.0 * f.hv), normal: f.normal };
                (patch, f.area())
            })
            .collect(),
        Shape::Mesh(m) => (0..m.triangles.len())
            .filter_map(|i| {
                let (a, b, c) = m.triangle(i);
                let n = (b - a).cross(c - a);
                let area = n.norm() / 2.0;
                let normal = n.normalized()?;
                let centroid = (a + b + c) / 3.0;
                (normal.dot(eye - centroid) > 0.0).then_some((Patch::Tri { a, b, c, normal }, area))
            })
            .collect(),
    }
}

/// Stratified samples over the camera-facing surface: `n` points allocated
/// to patches by area (largest remainder), each patch covered by a rank-1
/// golden-ratio lattice with a seeded random shift.
pub fn surface_samples(obj: &SceneObject, eye: Vec3, n: usize, seed: u64) -> Vec<SurfaceSample> {
    let patches = facing_patches(obj, eye);
    let total: f64 = patches.iter().map(|(_, a)| a).sum();
    if patches.is_empty() || total <= 0.0 || n == 0 {
        return Vec::new();
    }
    let quotas: Vec<f64> = patches.iter().map(|(_, a)| a / total * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut rest = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..patches.len()).collect();
    order.sort_by(|&i, &j| {
        let (fi, fj) = (quotas[i] - quotas[i].floor(), quotas[j] - quotas[j].floor());
        fj.total_cmp(&fi).then(i.cmp(&j))
    });
    for &i in &order {
        if rest == 0 {
            break;
        }
        counts[i] += 1;
        rest -= 1;
    }
    let mut rng = crate::seed::rng(seed, &[]);
    let mut out = Vec::with_capacity(n);
    for ((patch, _), &m) in patches.iter().zip(&counts) {
        let (dx, dy): (f64, f64) = (rng.gen(), rng.gen());
        for i in 0..m {
            let s = ((i as f64 + 0.5) / m as f64 + dx).fract();
            let t = (i as f64 * GOLDEN + dy).fract();
            out.push(patch.at(s, t));
        }
    }
    out
}

/// Fraction of camera-facing surface samples (those projecting inside the
/// image) whose ray toward the camera center is blocked by any geometry,
/// the object's own included. Returns 1.0 when no sample projects inside
/// the image.
pub fn compute_occlusion(scene: &ResolvedScene, camera: &CameraModel, instance_id: &str, n_rays: usize, seed: u64) -> Result<f64, RenderError> {
    if n_rays == 0 {
        return Err(RenderError::NoRays);
    }
    let obj = scene.object(instance_id).ok_or_else(|| RenderError::UnknownInstance(instance_id.into()))?;
    let eye = camera.position;
    let mut counted = 0usize;
    let mut blocked = 0usize;
    for s in surface_samples(obj, eye, n_rays, seed) {
        let Some(p) = camera.project_point(s.point) else { continue };
        if !camera.in_image(p.u, p.v) {
            continue;
        }
        let to_cam = eye - s.point;
        let dist = to_cam.norm();
        let Ok(dir_ray) = Ray::new(s.point, to_cam) else { continue };
        counted += 1;
        let ray = Ray::new(s.point + dir_ray.direction() * SELF_OFFSET, to_cam).expect("non-zero direction");
        if scene.blocked(&ray, dist - SELF_OFFSET) {
            blocked += 1;
        }
    }
    Ok(if counted == 0 { 1.0 } else { blocked as f64 / counted as f64 })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures;
    use super::*;
    use crate::scene::testing::{box_object, resolved};

    #[test]
    fn lone_object_is_fully_visible() {
        let (scene, cam) = fixtures::half_cover(None);
        assert_eq!(compute_occlusion(&scene, &cam, "target", 1024, 3).unwrap(), 0.0);
        assert!(compute_occlusion(&scene, &cam, "nope", 1024, 3).is_err());
        assert!(compute_occlusion(&scene, &cam, "target", 0, 3).is_err());
    }

    #[test]
    fn wall_hides_everything() {
        let (mut scene, cam) = fixtures::half_cover(None);
        let wall = box_object("wall", (3.0, 0.0, -10.0), (100.0, 0.1, 100.0), 0.0);
        scene = resolved(scene.objects.into_iter().chain([wall]).collect(), 200.0);
        assert_eq!(compute_occlusion(&scene, &cam, "target", 1024, 3).unwrap(), 1.0);
    }

    #[test]
    fn half_cover_is_close_to_closed_form() {
        for y0 in [0.0, 0.1, -0.2] {
            let (scene, cam) = fixtures::half_cover(Some(y0));
            let want = fixtures::half_cover_expected(y0);
            let got = compute_occlusion(&scene, &cam, "target", 1024, 11).unwrap();
            assert!((got - want).abs() <= 0.03, "y0 {y0}: {got} vs {want}");
        }
        assert_eq!(fixtures::half_cover_expected(0.0), 0.5);
        assert!((fixtures::half_cover_expected(0.1) - 0.38125).abs() < 1e-12);
    }

    #[test]
    fn samples_are_allocated_exactly() {
        let o = box_object("b", (0.0, 0.0, 0.0), (1.0, 2.0, 3.0), 0.4);
        let s = surface_samples(&o, Vec3::new(5.0, 4.0, 6.0), 1000, 1);
        assert_eq!(s.len(), 1000);
        for p in &s {
            assert!(p.normal.dot(Vec3::new(5.0, 4.0, 6.0) - p.point) > 0.0);
            let b = o.bounding_box();
            let l = b.to_local(p.point);
            let h = b.half_extents + Vec3::new(1e-9, 1e-9, 1e-9);
            assert!(l.x.abs() <= h.x && l.y.abs() <= h.y && l.z.abs() <= h.z);
        }
    }
}
