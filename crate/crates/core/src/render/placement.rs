use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{RenderError, ViewRecord};
use crate::geometry::{CameraModel, Vec3};
use crate::scene::SceneInstance;
use crate::seed_path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViewpointClass {
    Drone,
    BirdsEye,
    Egocentric,
    Surveillance,
}

impl ViewpointClass {
    /// Camera height range, meters.
    pub fn height_range(self) -> (f64, f64) {
        match self {
            ViewpointClass::Egocentric => (1.4, 1.8),
            ViewpointClass::Drone => (8.0, 15.0),
            ViewpointClass::BirdsEye => (10.0, 20.0),
            ViewpointClass::Surveillance => (2.5, 3.5),
        }
    }

    /// Pitch range in degrees (min, max).
    pub fn pitch_range_deg(self) -> (f64, f64) {
        match self {
            ViewpointClass::Egocentric => (-15.0, 5.0),
            ViewpointClass::Drone => (-60.0, -35.0),
            ViewpointClass::BirdsEye => (-90.0, -80.0),
            ViewpointClass::Surveillance => (-40.0, -20.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ViewpointClass::Drone => "drone",
            ViewpointClass::BirdsEye => "bird's-eye",
            ViewpointClass::Egocentric => "egocentric",
            ViewpointClass::Surveillance => "surveillance",
        }
    }
}

/// Where the camera aims: the floor center, or an off-center point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coverage {
    Center,
    Peripheral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FovPreset {
    Wide,
    Narrow,
}

impl FovPreset {
    pub fn fov_x(self) -> f64 {
        match self {
            FovPreset::Wide => 90f64.to_radians(),
            FovPreset::Narrow => 50f64.to_radians(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub class: ViewpointClass,
    pub count: i64,
    pub coverage: Coverage,
    pub fov_preset: FovPreset,
}

fn default_width() -> u32 {
    1024
}

fn default_height() -> u32 {
    768
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSpec {
    pub classes: Vec<ClassSpec>,
    #[serde(default = "default_width")]
    pub width: u32,
    #[serde(default = "default_height")]
    pub height: u32,
}

impl ViewSpec {
    pub fn from_json(text: &str) -> Result<ViewSpec, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn total(&self) -> usize {
        self.classes.iter().map(|c| c.count.max(0) as usize).sum()
    }
}

/// Cameras for every class entry in order, ids `v0, v1, …`.
///
/// * Egocentric: on the floor boundary scaled by 1.05, aimed at the target.
/// * Drone / bird's-eye: horizontal offset `h / tan|pitch|` from the target
///   at a random azimuth, so the target lands on the optical axis.
/// * Surveillance: at the floor corners in order (±x, ±y), aimed at the
///   target.
///
/// Pitch is sampled from the class range; for egocentric and surveillance
/// cameras it is then pulled toward the look-at pitch as far as the range
/// allows, so the target stays in the image.
pub fn place_cameras(scene: &SceneInstance, spec: &ViewSpec, seed: u64) -> Result<Vec<ViewRecord>, RenderError> {
    let [ex, ey] = scene.floor.extent;
    if !(ex > 0.0 && ey > 0.0) {
        return Err(RenderError::InvalidSpec("degenerate floor".into()));
    }
    if spec.width == 0 || spec.height == 0 {
        return Err(RenderError::InvalidSpec("zero image size".into()));
    }
    let mut out = Vec::new();
    for (ci, cs) in spec.classes.iter().enumerate() {
        if cs.count <= 0 {
            return Err(RenderError::InvalidSpec(format!("class entry {ci} ({:?}) has count {}", cs.class, cs.count)));
        }
        for k in 0..cs.count as u64 {
            let idx = out.len();
            let mut rng = crate::seed::rng(seed, seed_path!["camera", scene.scene_id.as_str(), ci, k]);
            let camera = place_one(cs, k, (ex, ey), spec.width, spec.height, &mut rng);
            out.push(ViewRecord { view_id: format!("v{idx}"), class: cs.class, camera });
        }
    }
    Ok(crate::canonical::round_trip(&out))
}

fn place_one(cs: &ClassSpec, k: u64, (ex, ey): (f64, f64), w: u32, h: u32, rng: &mut impl Rng) -> CameraModel {
    let (hlo, hhi) = cs.class.height_range();
    let (plo, phi) = cs.class.pitch_range_deg();
    let (plo, phi) = (plo.to_radians(), phi.to_radians());
    let height = rng.gen_range(hlo..=hhi);
    let pitch = rng.gen_range(plo..=phi);
    let target = match cs.coverage {
        Coverage::Center => Vec3::ZERO,
        Coverage::Peripheral => {
            let a = rng.gen_range(-PI..PI);
            let r = rng.gen_range(0.25..=0.4);
            Vec3::new(a.cos() * r * ex, a.sin() * r * ey, 0.0)
        }
    };
    let fov_x = cs.fov_preset.fov_x();
    let probe = CameraModel { position: Vec3::ZERO, yaw: 0.0, pitch: 0.0, fov_x, width: w, height: h };
    let half_v = probe.fov_y() / 2.0;
    let aim = |pos: Vec3, pitch: f64| {
        let d = target - pos;
        let yaw = if d.x.hypot(d.y) < 1e-9 { 0.0 } else { d.y.atan2(d.x) };
        CameraModel { position: pos, yaw, pitch, fov_x, width: w, height: h }
    };
    let pull = |pos: Vec3, pitch: f64| {
        let d = target - pos;
        let look = d.z.atan2(d.x.hypot(d.y));
        let window = 0.8 * half_v;
        pitch.clamp(look - window, look + window).clamp(plo, phi)
    };
    match cs.class {
        ViewpointClass::Drone | ViewpointClass::BirdsEye => {
            let az = rng.gen_range(-PI..PI);
            let dist = if pitch.abs() >= PI / 2.0 - 1e-12 { 0.0 } else { height / pitch.abs().tan() };
            let pos = Vec3::new(target.x - az.cos() * dist, target.y - az.sin() * dist, height);
            let yaw = if dist > 1e-9 { az } else { rng.gen_range(-PI..PI) };
            CameraModel { position: pos, yaw, pitch, fov_x, width: w, height: h }
        }
        ViewpointClass::Egocentric => {
            // uniform point on the scaled floor boundary
            let (sx, sy) = (ex * 1.05, ey * 1.05);
            let s = rng.gen_range(0.0..2.0 * (sx + sy));
            let (x, y) = if s < sx {
                (s - sx / 2.0, -sy / 2.0)
            } else if s < sx + sy {
                (sx / 2.0, s - sx - sy / 2.0)
            } else if s < 2.0 * sx + sy {
                (sx / 2.0 - (s - sx - sy), sy / 2.0)
            } else {
                (-sx / 2.0, sy / 2.0 - (s - 2.0 * sx - sy))
            };
            let pos = Vec3::new(x, y, height);
            aim(pos, pull(pos, pitch))
        }
        ViewpointClass::Surveillance => {
            let (x, y) = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)][(k % 4) as usize];
            let pos = Vec3::new(x * ex / 2.0, y * ey / 2.0, height);
            aim(pos, pull(pos, pitch))
        }
    }
}
