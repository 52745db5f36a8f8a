use rayon::prelude::*;

use super::{projected_shape, ViewRecord};
use crate::geometry::project_box_to_bbox2;
use crate::scene::ResolvedScene;

/// Per-pixel nearest-hit instance code (0 = background) and depth along the
/// optical axis in millimeters (0 = background, clamped to 65535).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceMap {
    pub width: u32,
    pub height: u32,
    pub ids: Vec<u32>,
    pub depth_mm: Vec<u16>,
}

impl InstanceMap {
    pub fn id_at(&self, x: u32, y: u32) -> u32 {
        self.ids[(y * self.width + x) as usize]
    }

    /// Binary P6 with the id in 24-bit little-endian RGB order.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.ids.len() * 3);
        for &id in &self.ids {
            out.extend_from_slice(&[(id & 0xff) as u8, ((id >> 8) & 0xff) as u8, ((id >> 16) & 0xff) as u8]);
        }
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> Option<InstanceMap> {
        let (w, h, max, body) = parse_pnm_header(bytes, b"P6")?;
        if max != 255 || body.len() != (w * h * 3) as usize {
            return None;
        }
        let ids = body.chunks_exact(3).map(|c| c[0] as u32 | (c[1] as u32) << 8 | (c[2] as u32) << 16).collect();
        Some(InstanceMap { width: w, height: h, ids, depth_mm: vec![0; (w * h) as usize] })
    }

    /// Binary 16-bit P5 (big-endian samples, as the format requires).
    pub fn depth_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        out.reserve(self.depth_mm.len() * 2);
        for &d in &self.depth_mm {
            out.extend_from_slice(&d.to_be_bytes());
        }
        out
    }

    /// False-color preview: one hue per instance, brighter when closer.
    pub fn preview_png(&self) -> Vec<u8> {
        let max_depth = self.depth_mm.iter().copied().max().unwrap_or(0).max(1) as f64;
        let mut rgb = Vec::with_capacity(self.ids.len() * 3);
        for (&id, &d) in self.ids.iter().zip(&self.depth_mm) {
            if id == 0 {
                rgb.extend_from_slice(&[236, 236, 230]);
                continue;
            }
            let h = crate::seed::derive(id as u64, &[]);
            let shade = 0.45 + 0.55 * (1.0 - d as f64 / max_depth);
            for k in 0..3 {
                let c = 60.0 + ((h >> (8 * k)) & 0xff) as f64 * 0.75;
                rgb.push((c * shade).round().clamp(0.0, 255.0) as u8);
            }
        }
        let mut out = Vec::new();
        let img = image::RgbImage::from_raw(self.width, self.height, rgb).expect("buffer matches size");
        img.write_to(&mut std::io::Cursor::new(&mut out), image::ImageFormat::Png).expect("in-memory png");
        out
    }
}

fn parse_pnm_header<'a>(bytes: &'a [u8], magic: &[u8]) -> Option<(u32, u32, u32, &'a [u8])> {
    if !bytes.starts_with(magic) {
        return None;
    }
    let mut fields = Vec::with_capacity(3);
    let mut i = magic.len();
    while fields.len() < 3 {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        fields.push(std::str::from_utf8(&bytes[start..i]).ok()?.parse().ok()?);
    }
    // exactly one whitespace byte separates the header from the raster
    Some((fields[0], fields[1], fields[2], bytes.get(i + 1..)?))
}

/// One primary ray through each pixel center; nearest hit wins.
pub fn render_instance_map(scene: &ResolvedScene, view: &ViewRecord) -> InstanceMap {
    let cam = &view.camera;
    let (w, h) = (cam.width, cam.height);
    // candidate culling by projected extent, dilated by a pixel
    let boxes: Vec<(usize, crate::geometry::Bbox2)> = scene
        .objects
        .iter()
        .enumerate()
        .filter_map(|(i, o)| project_box_to_bbox2(cam, projected_shape(o)).map(|p| (i, p.bbox.dilate(1.0))))
        .collect();
    let fwd = cam.forward();
    let rows: Vec<(Vec<u32>, Vec<u16>)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let vc = y as f64 + 0.5;
            let in_row: Vec<(usize, crate::geometry::Bbox2)> =
                boxes.iter().copied().filter(|(_, b)| b.y_min <= vc && vc <= b.y_max).collect();
            let mut ids = vec![0u32; w as usize];
            let mut depth = vec![0u16; w as usize];
            let mut cands = Vec::with_capacity(in_row.len());
            for x in 0..w {
                let uc = x as f64 + 0.5;
                cands.clear();
                cands.extend(in_row.iter().filter(|(_, b)| b.x_min <= uc && uc <= b.x_max).map(|(i, _)| *i));
                if cands.is_empty() {
                    continue;
                }
                let ray = cam.pixel_ray(x, y);
                if let Some((i, t)) = scene.first_hit(&ray, Some(&cands)) {
                    ids[x as usize] = scene.objects[i].code;
                    let mm = (t * ray.direction().dot(fwd) * 1000.0).round();
                    depth[x as usize] = mm.clamp(1.0, 65535.0) as u16;
                }
            }
            (ids, depth)
        })
        .collect();
    let mut ids = Vec::with_capacity((w * h) as usize);
    let mut depth_mm = Vec::with_capacity((w * h) as usize);
    for (i, d) in rows {
        ids.extend(i);
        depth_mm.extend(d);
    }
    InstanceMap { width: w, height: h, ids, depth_mm }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CameraModel, Vec3};
    use crate::render::{extract_view_metadata, RenderOptions, ViewpointClass};
    use crate::scene::testing::{box_object, resolved};

    fn view(cam: CameraModel) -> ViewRecord {
        ViewRecord { view_id: "v0".into(), class: ViewpointClass::Egocentric, camera: cam }
    }

    #[test]
    fn empty_and_full_frames() {
        let cam = CameraModel::new(Vec3::new(0.0, 0.0, 1.0), 0.0, 0.0, 1.2, 64, 48).unwrap();
        let m = render_instance_map(&resolved(vec![], 10.0), &view(cam));
        assert!(m.ids.iter().all(|&i| i == 0));
        let wall = box_object("wall", (3.0, 0.0, -50.0), (100.0, 1.0, 100.0), 0.0);
        let m = render_instance_map(&resolved(vec![wall], 200.0), &view(cam));
        assert!(m.ids.iter().all(|&i| i == 1));
        // the wall's near face is 2.5 m along the optical axis
        assert!(m.depth_mm.iter().all(|&d| d == 2500));
    }

    #[test]
    fn masks_inside_dilated_boxes_and_ppm_round_trip() {
        let objs = vec![
            box_object("a", (0.0, 0.0, 0.0), (1.0, 1.0, 1.0), 0.3),
            box_object("b", (1.5, 1.0, 0.0), (0.6, 0.8, 1.6), -0.7),
            box_object("c", (-0.5, 1.8, 0.0), (0.5, 0.5, 0.5), 1.1),
        ];
        let scene = resolved(objs, 10.0);
        let cam = CameraModel::new(Vec3::new(6.0, 3.0, 3.0), (-3.0f64).atan2(-6.0), -0.35, 1.0, 160, 120).unwrap();
        let v = view(cam);
        let map = render_instance_map(&scene, &v);
        let meta = extract_view_metadata(&scene, &v, &RenderOptions { n_rays: 64, seed: 0 });
        for o in &scene.objects {
            let bb = meta.iter().find(|m| m.instance_id == o.instance_id).unwrap().bbox2.unwrap().dilate(1.0);
            let mut n = 0;
            for y in 0..map.height {
                for x in 0..map.width {
                    if map.id_at(x, y) == o.code {
                        n += 1;
                        assert!(bb.contains_point(x as f64 + 0.5, y as f64 + 0.5));
                    }
                }
            }
            assert!(n > 0, "{} not rendered", o.instance_id);
        }
        let back = InstanceMap::from_ppm(&map.to_ppm()).unwrap();
        assert_eq!(back.ids, map.ids);
        assert_eq!(&map.depth_pgm()[..15], b"P5\n160 120\n6553");
    }
}
