use std::collections::{BTreeMap, BTreeSet};
use std::io::Cursor;

use image::{imageops, Rgb, RgbImage};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{sha256_hex, ChatProvider, ChatRequest, ClientError, ProviderError};
use crate::assets::{AssetError, AssetLibrary, CategoryRecord, Manifest, TagEntry};
use crate::geometry::{CameraModel, Pose3, Vec3};
use crate::render::{render_instance_map, ViewRecord, ViewpointClass};
use crate::scene::{FloorSpec, Lighting, PlacedObject, ResolvedScene, SceneInstance};

const TILE: u32 = 160;
const GUTTER: u32 = 4;
const STAGE_ATTEMPTS: u32 = 3;

#[derive(Debug, Clone)]
pub struct AssetPreview {
    pub asset_id: String,
    pub image: RgbImage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageExchange {
    pub stage: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asset_id: Option<String>,
    pub prompt_digest: String,
    pub raw_response: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OsdTagOutput {
    /// Keys and tag library for the category, named as requested.
    pub category: CategoryRecord,
    /// Name the model gave the category in stage 1.
    pub reported_name: String,
    pub assignments: BTreeMap<String, BTreeSet<String>>,
    /// Non-fatal oddities, e.g. no comparison keys for a lone asset.
    pub flags: Vec<String>,
    pub transcript: Vec<StageExchange>,
}

/// Grid of previews sorted by asset id, each scaled to a fixed tile.
pub fn montage(previews: &[AssetPreview]) -> RgbImage {
    let mut sorted: Vec<&AssetPreview> = previews.iter().collect();
    sorted.sort_by(|a, b| a.asset_id.cmp(&b.asset_id));
    let n = sorted.len().max(1) as u32;
    let cols = (n as f64).sqrt().ceil() as u32;
    let rows = n.div_ceil(cols);
    let mut out = RgbImage::from_pixel(cols * (TILE + GUTTER) + GUTTER, rows * (TILE + GUTTER) + GUTTER, Rgb([255, 255, 255]));
    for (i, p) in sorted.iter().enumerate() {
        let (c, r) = (i as u32 % cols, i as u32 / cols);
        let tile = imageops::resize(&p.image, TILE, TILE, imageops::FilterType::Triangle);
        imageops::replace(&mut out, &tile, (GUTTER + c * (TILE + GUTTER)) as i64, (GUTTER + r * (TILE + GUTTER)) as i64);
    }
    out
}

fn png(img: &RgbImage) -> Vec<u8> {
    let mut out = Vec::new();
    img.write_to(&mut Cursor::new(&mut out), image::ImageFormat::Png).expect("in-memory png");
    out
}

/// Silhouette preview of one asset from a raised front-left viewpoint,
/// for manifests without preview images.
pub fn render_asset_preview(lib: &AssetLibrary, asset_id: &str, size: u32) -> Result<RgbImage, AssetError> {
    let a = lib.asset(asset_id).ok_or_else(|| AssetError::UnknownAsset(asset_id.into()))?;
    let d = a.dims;
    let reach = d.width.max(d.depth).max(d.height);
    let dist = 1.8 * reach + 0.5;
    let az = 30f64.to_radians();
    let eye = Vec3::new(dist * az.cos(), dist * az.sin(), 0.6 * d.height + 0.4 * dist);
    let target = Vec3::new(0.0, 0.0, d.height / 2.0);
    let yaw = (target.y - eye.y).atan2(target.x - eye.x);
    let horiz = ((target.x - eye.x).powi(2) + (target.y - eye.y).powi(2)).sqrt();
    let pitch = (target.z - eye.z).atan2(horiz);
    let camera = CameraModel::new(eye, yaw, pitch, 50f64.to_radians(), size, size)
        .map_err(|e| AssetError::InvalidAsset { asset_id: asset_id.into(), reason: e.to_string() })?;
    let scene = SceneInstance {
        scene_id: format!("preview_{asset_id}"),
        theme_id: "preview".into(),
        seed: 0,
        floor: FloorSpec { extent: [4.0 * reach, 4.0 * reach], material_tag: "preview".into() },
        lighting: Lighting::default(),
        objects: vec![PlacedObject {
            instance_id: asset_id.into(),
            asset_id: asset_id.into(),
            pose: Pose3::new(Vec3::new(0.0, 0.0, 0.0), 0.0),
            scale: 1.0,
        }],
    };
    let resolved = ResolvedScene::new(scene, lib).map_err(|e| AssetError::InvalidAsset { asset_id: asset_id.into(), reason: e.to_string() })?;
    let view = ViewRecord { view_id: "preview".into(), class: ViewpointClass::Drone, camera };
    let map = render_instance_map(&resolved, &view);
    let img = image::load_from_memory(&map.preview_png()).expect("own png").to_rgb8();
    Ok(img)
}

/// First `{...}` span of the reply as JSON.
fn json_object(raw: &str) -> Option<Value> {
    let (a, b) = (raw.find('{')?, raw.rfind('}')?);
    (a < b).then(|| serde_json::from_str(&raw[a..=b]).ok()).flatten()
}

struct Stages<'a> {
    provider: &'a dyn ChatProvider,
    seed: u64,
    transcript: Vec<StageExchange>,
}

impl Stages<'_> {
    fn ask(&mut self, stage: u8, asset: Option<&str>, tag: String, text: String, images: Vec<Vec<u8>>) -> Result<String, ClientError> {
        let system = "You are helping build a hierarchical tag library for 3D assets. Reply with a single JSON object and nothing else.".to_string();
        let mut parts: Vec<&[u8]> = vec![system.as_bytes(), text.as_bytes()];
        parts.extend(images.iter().map(Vec::as_slice));
        let digest = sha256_hex(&parts);
        let req = ChatRequest { tag, system, text, images, seed: self.seed };
        let mut attempt = 0;
        let raw = loop {
            attempt += 1;
            match self.provider.complete(&req) {
                Ok(r) => break r,
                Err(ProviderError::Transient { .. }) if attempt < STAGE_ATTEMPTS => {
                    std::thread::sleep(std::time::Duration::from_secs(1 << (attempt - 1)));
                }
                Err(ProviderError::Auth { .. }) => {
                    return Err(ClientError::Auth { endpoint: self.provider.name().to_string() })
                }
                Err(source) => return Err(ClientError::Provider { stage, source }),
            }
        };
        self.transcript.push(StageExchange { stage, asset_id: asset.map(String::from), prompt_digest: digest, raw_response: raw.clone() });
        Ok(raw)
    }

    fn fail(&self, stage: u8, asset: Option<&str>, message: impl Into<String>, raw: &str) -> ClientError {
        ClientError::Stage {
            stage,
            asset: asset.map(String::from),
            message: message.into(),
            raw: raw.to_string(),
            transcript: self.transcript.clone(),
        }
    }
}

#[derive(Deserialize)]
struct Stage1 {
    #[serde(default)]
    category: String,
    #[serde(default)]
    comparison_keys: Vec<String>,
}

#[derive(Deserialize)]
struct Stage2 {
    tags: Vec<TagEntry>,
}

#[derive(Deserialize)]
struct Stage3 {
    tags: Vec<String>,
}

/// Overview, library, assignment. Stage 3 output is kept as given, so
/// undeclared tags surface later in tag-library verification.
pub fn osd_tag_category(
    category: &str,
    previews: &[AssetPreview],
    provider: &dyn ChatProvider,
    seed: u64,
) -> Result<OsdTagOutput, ClientError> {
    let mut st = Stages { provider, seed, transcript: Vec::new() };
    if previews.is_empty() {
        return Err(st.fail(1, None, format!("category `{category}` has no asset previews"), ""));
    }
    let mut flags = Vec::new();
    let mut ids: Vec<&str> = previews.iter().map(|p| p.asset_id.as_str()).collect();
    ids.sort();

    let text = format!(
        "The image is an overview of {} assets of one category, tiled in a grid ordered {}. \
         Name the category and list the key visual or functional attributes that tell these assets apart. \
         Reply as {{\"category\": \"...\", \"comparison_keys\": [\"...\"]}}.",
        previews.len(),
        ids.join(", ")
    );
    let raw = st.ask(1, None, "osd:stage1".into(), text, vec![png(&montage(previews))])?;
    let s1: Stage1 = json_object(&raw)
        .and_then(|v| serde_json::from_value(v).ok())
        .ok_or_else(|| st.fail(1, None, "expected {category, comparison_keys}", &raw))?;
    let keys: Vec<String> = s1.comparison_keys.into_iter().map(|k| k.trim().to_string()).filter(|k| !k.is_empty()).collect();
    if keys.is_empty() {
        flags.push(format!("category `{category}`: no comparison keys"));
    }

    let text = format!(
        "Category: {category}. Comparison keys: {}. Build a multi-level tag library: level 1 tags are the \
         coarsest distinctions, deeper levels refine them. Tag ids must be unique and start with `{category}.`. \
         Reply as {{\"tags\": [{{\"id\": \"...\", \"level\": 1, \"text\": \"...\"}}]}}.",
        if keys.is_empty() { "(none)".to_string() } else { keys.join(", ") }
    );
    let raw = st.ask(2, None, "osd:stage2".into(), text, vec![])?;
    let s2: Stage2 = json_object(&raw)
        .and_then(|v| serde_json::from_value(v).ok())
        .ok_or_else(|| st.fail(2, None, "expected {tags: [{id, level, text}]}", &raw))?;
    let mut seen = BTreeSet::new();
    for t in &s2.tags {
        if t.id.trim().is_empty() || t.level == 0 {
            return Err(st.fail(2, None, format!("tag {:?} needs a non-empty id and level ≥ 1", t.id), &raw));
        }
        if !seen.insert(t.id.clone()) {
            return Err(st.fail(2, None, format!("duplicate tag id `{}`", t.id), &raw));
        }
    }
    let library: Vec<String> = s2.tags.iter().map(|t| format!("{} (level {}): {}", t.id, t.level, t.text)).collect();

    let mut sorted: Vec<&AssetPreview> = previews.iter().collect();
    sorted.sort_by(|a, b| a.asset_id.cmp(&b.asset_id));
    let mut assignments = BTreeMap::new();
    for p in sorted {
        let text = format!(
            "Asset `{}` of category {category}. Tag library:\n{}\nAssign every tag that applies to this asset. \
             Reply as {{\"tags\": [\"tag id\", ...]}}.",
            p.asset_id,
            library.join("\n")
        );
        let a = Some(p.asset_id.as_str());
        let raw = st.ask(3, a, format!("osd:stage3:{}", p.asset_id), text, vec![png(&p.image)])?;
        let s3: Stage3 = json_object(&raw)
            .and_then(|v| serde_json::from_value(v).ok())
            .ok_or_else(|| st.fail(3, a, "expected {tags: [...]}", &raw))?;
        assignments.insert(p.asset_id.clone(), s3.tags.into_iter().collect());
    }

    Ok(OsdTagOutput {
        category: CategoryRecord { name: category.to_string(), comparison_keys: keys, tags: s2.tags },
        reported_name: s1.category,
        assignments,
        flags,
        transcript: st.transcript,
    })
}

/// Manifest with the category's keys and tags replaced and the assigned
/// tags written onto its assets.
pub fn apply_osd_output(manifest: &Manifest, out: &OsdTagOutput) -> Manifest {
    let mut m = manifest.clone();
    match m.categories.iter_mut().find(|c| c.name == out.category.name) {
        Some(c) => *c = out.category.clone(),
        None => m.categories.push(out.category.clone()),
    }
    for a in m.assets.iter_mut().filter(|a| a.category == out.category.name) {
        if let Some(t) = out.assignments.get(&a.asset_id) {
            a.tags = t.clone();
        }
    }
    m
}
