//! File-to-file stages wiring the library together: themes → scenes →
//! renders → questions.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assets::{load_asset_library, AssetError, AssetLibrary};
use crate::qa::{generate_dataset, load_templates, Dataset, QaError, SceneInput, Targets};
use crate::relations::{build_relation_graphs, RelationGraphs, RelationParams};
use crate::render::{
    extract_scene_metadata, place_cameras, render_instance_map, InstanceMap, RenderError, RenderOptions, SceneMetadata,
    ViewSpec,
};
use crate::scene::{sample_scene, validate_theme, ResolvedScene, SceneError, SceneInstance, ThemeConfig};
use crate::seed_path;

/// Scene sampling restarts with a fresh derived seed this many times when a
/// theme constraint cannot be met.
pub const MAX_SCENE_RETRIES: u32 = 32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Asset(#[from] AssetError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Qa(#[from] QaError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Io { path: path.display().to_string(), message: e.to_string() }
}

fn read(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    out.sort();
    Ok(out)
}

/// Every `*.json` theme in `dir`, validated against the library, sorted by
/// theme id.
pub fn load_themes(dir: impl AsRef<Path>, lib: &AssetLibrary) -> Result<Vec<ThemeConfig>, PipelineError> {
    let mut out = Vec::new();
    for p in json_files(dir.as_ref())? {
        let t = ThemeConfig::from_json(&read(&p)?).map_err(|e| io_err(&p, e))?;
        validate_theme(&t, lib)?;
        out.push(t);
    }
    out.sort_by(|a, b| a.theme_id.cmp(&b.theme_id));
    Ok(out)
}

pub fn load_view_spec(path: impl AsRef<Path>) -> Result<ViewSpec, PipelineError> {
    let path = path.as_ref();
    ViewSpec::from_json(&read(path)?).map_err(|e| io_err(path, e))
}

pub fn load_targets(path: impl AsRef<Path>) -> Result<Targets, PipelineError> {
    let path = path.as_ref();
    Ok(Targets::from_json(&read(path)?)?)
}

/// One scene of a theme: `{theme}_{index:03}`, seeded from
/// `(seed, "scene", theme, index, retry)` with retries on unsatisfiable
/// constraints.
pub fn generate_scene(
    theme: &ThemeConfig,
    lib: &AssetLibrary,
    index: usize,
    seed: u64,
) -> Result<SceneInstance, SceneError> {
    let mut last = None;
    for retry in 0..MAX_SCENE_RETRIES {
        let s = crate::seed::derive(seed, seed_path!["scene", theme.theme_id.as_str(), index, retry]);
        match sample_scene(theme, lib, s) {
            Ok(mut scene) => {
                scene.scene_id = format!("{}_{index:03}", theme.theme_id);
                return Ok(scene);
            }
            Err(e @ SceneError::ConstraintUnsatisfiable { .. }) => {
                log::debug!("{} #{index} retry {retry}: {e}", theme.theme_id);
                last = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// `count` scenes per theme, in (theme, index) order.
pub fn generate_scenes(
    themes: &[ThemeConfig],
    lib: &AssetLibrary,
    count: usize,
    seed: u64,
) -> Result<Vec<SceneInstance>, PipelineError> {
    let jobs: Vec<(&ThemeConfig, usize)> = themes.iter().flat_map(|t| (0..count).map(move |i| (t, i))).collect();
    let out: Result<Vec<_>, SceneError> = jobs.par_iter().map(|(t, i)| generate_scene(t, lib, *i, seed)).collect();
    Ok(out?)
}

pub fn save_scenes(scenes: &[SceneInstance], dir: impl AsRef<Path>) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir.as_ref()).map_err(|e| io_err(dir.as_ref(), e))?;
    for s in scenes {
        s.save(dir.as_ref().join(format!("{}.json", s.scene_id)))?;
    }
    Ok(())
}

pub fn load_scenes(dir: impl AsRef<Path>) -> Result<Vec<SceneInstance>, PipelineError> {
    let mut out = Vec::new();
    for p in json_files(dir.as_ref())? {
        out.push(SceneInstance::load(&p)?);
    }
    out.sort_by(|a, b| a.scene_id.cmp(&b.scene_id));
    Ok(out)
}

/// Metadata plus one instance map per view.
pub struct RenderedScene {
    pub metadata: SceneMetadata,
    pub maps: Vec<InstanceMap>,
}

pub fn render_scene(
    scene: &ResolvedScene,
    spec: &ViewSpec,
    opts: &RenderOptions,
) -> Result<RenderedScene, PipelineError> {
    let views = place_cameras(&scene.scene, spec, opts.seed)?;
    let maps = views.iter().map(|v| render_instance_map(scene, v)).collect();
    let metadata = extract_scene_metadata(scene, views, opts);
    Ok(RenderedScene { metadata, maps })
}

/// `render/{scene_id}/metadata.json` and per view `{view}.ppm` (instance
/// ids), `{view}_depth.pgm` and `{view}.png` (preview).
pub fn save_render(r: &RenderedScene, render_root: impl AsRef<Path>) -> Result<(), PipelineError> {
    let dir = render_root.as_ref().join(&r.metadata.scene_id);
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    r.metadata.save(dir.join("metadata.json"))?;
    for (v, m) in r.metadata.views.iter().zip(&r.maps) {
        write(&dir.join(format!("{}.ppm", v.view_id)), m.to_ppm())?;
        write(&dir.join(format!("{}_depth.pgm", v.view_id)), m.depth_pgm())?;
        write(&dir.join(format!("{}.png", v.view_id)), m.preview_png())?;
    }
    Ok(())
}

pub fn load_metadata(render_root: impl AsRef<Path>, scene_id: &str) -> Result<SceneMetadata, PipelineError> {
    Ok(SceneMetadata::load(render_root.as_ref().join(scene_id).join("metadata.json"))?)
}

/// A scene with everything question generation needs.
pub struct PreparedScene {
    pub resolved: ResolvedScene,
    pub metadata: SceneMetadata,
    pub graphs: RelationGraphs,
}

impl PreparedScene {
    pub fn new(resolved: ResolvedScene, metadata: SceneMetadata, params: &RelationParams) -> PreparedScene {
        let graphs = build_relation_graphs(&resolved, &metadata.views, &metadata.objects, params);
        PreparedScene { resolved, metadata, graphs }
    }

    pub fn input(&self) -> SceneInput<'_> {
        SceneInput { scene: &self.resolved, metadata: &self.metadata, graphs: &self.graphs }
    }
}

/// Resolve scenes and pair them with their saved metadata.
pub fn prepare_scenes(
    scenes: Vec<SceneInstance>,
    lib: &AssetLibrary,
    render_root: impl AsRef<Path>,
    params: &RelationParams,
) -> Result<Vec<PreparedScene>, PipelineError> {
    let root = render_root.as_ref();
    scenes
        .into_par_iter()
        .map(|s| {
            let metadata = load_metadata(root, &s.scene_id)?;
            let resolved = ResolvedScene::new(s, lib)?;
            Ok(PreparedScene::new(resolved, metadata, params))
        })
        .collect()
}

/// Everything a full run reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub global_seed: u64,
    pub assets: PathBuf,
    pub themes: PathBuf,
    pub views: PathBuf,
    pub templates: PathBuf,
    pub targets: PathBuf,
    pub out: PathBuf,
    pub scenes_per_theme: usize,
    #[serde(default = "default_rays")]
    pub n_rays: usize,
    #[serde(default)]
    pub relation_params: RelationParams,
}

fn default_rays() -> usize {
    crate::render::DEFAULT_N_RAYS
}

impl PipelineConfig {
    /// The bundled three-theme demo, writing under `out`.
    pub fn demo(out: impl Into<PathBuf>) -> PipelineConfig {
        let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo");
        PipelineConfig {
            global_seed: 42,
            assets: data.join("assets.json"),
            themes: data.join("themes"),
            views: data.join("views.json"),
            templates: data.join("templates"),
            targets: data.join("targets.json"),
            out: out.into(),
            scenes_per_theme: 20,
            n_rays: default_rays(),
            relation_params: RelationParams::default(),
        }
    }
}

pub struct PipelineOutput {
    pub dataset: Dataset,
    pub scenes: usize,
    pub dataset_path: PathBuf,
}

/// Scenes, renders and a dataset under `cfg.out`:
/// `scenes/*.json`, `render/{scene}/…`, `data.jsonl`, `shortfall.txt`,
/// `run_config.json`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    run_pipeline_with(cfg, None)
}

/// As [`run_pipeline`] with the dataset targets overridden.
pub fn run_pipeline_with(cfg: &PipelineConfig, targets: Option<Targets>) -> Result<PipelineOutput, PipelineError> {
    cfg.relation_params.validate().map_err(|e| io_err(Path::new("relation_params"), e))?;
    let lib = load_asset_library(&cfg.assets)?;
    let themes = load_themes(&cfg.themes, &lib)?;
    let spec = load_view_spec(&cfg.views)?;
    let templates = load_templates(&cfg.templates)?;
    let targets = match targets {
        Some(t) => t,
        None => load_targets(&cfg.targets)?,
    };
    std::fs::create_dir_all(&cfg.out).map_err(|e| io_err(&cfg.out, e))?;
    crate::canonical::write_pretty(cfg.out.join("run_config.json"), cfg).map_err(|e| io_err(&cfg.out, e))?;

    let scenes = generate_scenes(&themes, &lib, cfg.scenes_per_theme, cfg.global_seed)?;
    save_scenes(&scenes, cfg.out.join("scenes"))?;
    let opts = RenderOptions { n_rays: cfg.n_rays, seed: cfg.global_seed };
    let render_root = cfg.out.join("render");
    let prepared: Vec<PreparedScene> = scenes
        .into_par_iter()
        .map(|s| {
            let resolved = ResolvedScene::new(s, &lib)?;
            let r = render_scene(&resolved, &spec, &opts)?;
            save_render(&r, &render_root)?;
            Ok(PreparedScene::new(resolved, r.metadata, &cfg.relation_params))
        })
        .collect::<Result<_, PipelineError>>()?;
    let inputs: Vec<SceneInput> = prepared.iter().map(PreparedScene::input).collect();
    let dataset = generate_dataset(&inputs, &lib, &templates, &targets, &cfg.relation_params, cfg.global_seed)?;
    let dataset_path = cfg.out.join("data.jsonl");
    crate::qa::write_jsonl(&dataset_path, &dataset.questions)?;
    write(&cfg.out.join("shortfall.txt"), dataset.shortfall_report())?;
    Ok(PipelineOutput { dataset, scenes: prepared.len(), dataset_path })
}

/// Per-task question counts.
pub fn task_counts(dataset: &Dataset) -> BTreeMap<crate::qa::Task, usize> {
    let mut out = BTreeMap::new();
    for q in &dataset.questions {
        *out.entry(q.task).or_default() += 1;
    }
    out
}
