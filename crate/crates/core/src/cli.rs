//! Command-line front end. Exit codes: 0 success, 1 validation failure,
//! 2 usage error (bad flags, missing or malformed inputs), 3 external
//! service failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::assets::{load_asset_library, verify_tag_library, AssetError, AssetLibrary, Manifest, Severity};
use crate::client::{
    apply_osd_output, osd_tag_category, render_asset_preview, run_benchmark, AssetPreview, BenchOptions, ChatProvider,
    ClientError, HttpProvider, MockFixture, MockProvider, ModelEndpoint, PromptMode,
};
use crate::eval::{self, Axis, EvalError};
use crate::pipeline::{self, PipelineConfig, PipelineError};
use crate::qa::{self, QaError};
use crate::relations::RelationParams;
use crate::render::{RenderOptions, DEFAULT_N_RAYS};
use crate::scene::ResolvedScene;

#[derive(Debug, Parser, Serialize, Deserialize)]
#[command(name = "sparseview", version, about = "Multi-view spatial-reasoning data engine")]
pub struct Cli {
    /// Global seed; every random stream derives from it.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads (defaults to all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// JSON object of flag values (snake_case names) that override the
    /// command line.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize, Deserialize)]
pub enum Command {
    /// Asset manifest checks and tagging.
    Assets {
        #[command(subcommand)]
        cmd: AssetsCmd,
    },
    /// Scene sampling.
    Scene {
        #[command(subcommand)]
        cmd: SceneCmd,
    },
    /// Camera placement, metadata and instance maps.
    Render(RenderArgs),
    /// Question generation and verification.
    Qa {
        #[command(subcommand)]
        cmd: QaCmd,
    },
    /// Model benchmark runs.
    Bench {
        #[command(subcommand)]
        cmd: BenchCmd,
    },
    /// Scoring and baselines.
    Eval {
        #[command(subcommand)]
        cmd: EvalCmd,
    },
    /// Dataset statistics.
    Stats(StatsArgs),
    /// Every generation stage in one go.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Subcommand, Serialize, Deserialize)]
pub enum AssetsCmd {
    Validate {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Tag(TagArgs),
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct EndpointArgs {
    /// Endpoint name looked up in `--endpoints`.
    #[arg(long, conflicts_with = "mock")]
    pub endpoint: Option<String>,
    /// JSON list of endpoint definitions.
    #[arg(long, default_value = "endpoints.json")]
    pub endpoints: PathBuf,
    /// Mock fixture file instead of a real endpoint.
    #[arg(long)]
    pub mock: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct TagArgs {
    pub manifest: PathBuf,
    #[command(flatten)]
    pub endpoint: EndpointArgs,
    /// Only this category (default: every category with assets).
    #[arg(long)]
    pub category: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand, Serialize, Deserialize)]
pub enum SceneCmd {
    Gen(SceneGenArgs),
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct SceneGenArgs {
    #[arg(long)]
    pub assets: PathBuf,
    #[arg(long)]
    pub themes: PathBuf,
    /// Scenes per theme.
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct RenderArgs {
    #[arg(long)]
    pub assets: PathBuf,
    #[arg(long)]
    pub scenes: PathBuf,
    #[arg(long)]
    pub views: PathBuf,
    #[arg(long, default_value_t = DEFAULT_N_RAYS)]
    pub n_rays: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand, Serialize, Deserialize)]
pub enum QaCmd {
    Gen(QaGenArgs),
    Verify(QaVerifyArgs),
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct QaGenArgs {
    #[arg(long)]
    pub assets: PathBuf,
    #[arg(long)]
    pub scenes: PathBuf,
    /// Render root holding `{scene}/metadata.json`.
    #[arg(long)]
    pub render: PathBuf,
    #[arg(long)]
    pub templates: PathBuf,
    #[arg(long)]
    pub targets: PathBuf,
    /// Supervision level 1-4 attached to every question.
    #[arg(long)]
    pub supervision: Option<u8>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct QaVerifyArgs {
    pub data: PathBuf,
    #[arg(long)]
    pub assets: PathBuf,
    #[arg(long)]
    pub scenes: PathBuf,
    #[arg(long)]
    pub render: PathBuf,
}

#[derive(Debug, Subcommand, Serialize, Deserialize)]
pub enum BenchCmd {
    Run(BenchArgs),
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct BenchArgs {
    pub data: PathBuf,
    #[command(flatten)]
    pub endpoint: EndpointArgs,
    #[arg(long, default_value = "thinking")]
    pub mode: PromptMode,
    /// Render root the dataset's image paths are relative to.
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to `<out>.transcript.jsonl`.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    /// Skip questions already answered in the transcript.
    #[arg(long)]
    pub resume: bool,
    /// Overrides the endpoint's setting.
    #[arg(long)]
    pub max_concurrency: Option<usize>,
}

#[derive(Debug, Subcommand, Serialize, Deserialize)]
pub enum EvalCmd {
    Score(ScoreArgs),
    Baseline(BaselineArgs),
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct ScoreArgs {
    pub data: PathBuf,
    pub preds: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Difficulty curves: `reasoning` or `visibility`, each optionally
    /// `axis=e0,e1,...` with explicit bin edges. Repeatable.
    #[arg(long)]
    pub curves: Vec<String>,
    /// Drop the complementary-axis filter from curves.
    #[arg(long)]
    pub no_filter: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Chance,
    Frequency,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct BaselineArgs {
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub kind: BaselineKind,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct StatsArgs {
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct PipelineArgs {
    /// Start from the bundled three-theme demo inputs.
    #[arg(long)]
    pub demo: bool,
    #[arg(long, required_unless_present = "demo")]
    pub assets: Option<PathBuf>,
    #[arg(long, required_unless_present = "demo")]
    pub themes: Option<PathBuf>,
    #[arg(long, required_unless_present = "demo")]
    pub views: Option<PathBuf>,
    #[arg(long, required_unless_present = "demo")]
    pub templates: Option<PathBuf>,
    #[arg(long, required_unless_present = "demo")]
    pub targets: Option<PathBuf>,
    #[arg(long)]
    pub scenes_per_theme: Option<usize>,
    #[arg(long)]
    pub n_rays: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    External(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Usage(_) => 2,
            CliError::External(_) => 3,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match &e {
            PipelineError::Io { .. } => CliError::Usage(e.to_string()),
            PipelineError::Asset(a) => a.clone().into(),
            PipelineError::Qa(QaError::Io { .. }) => CliError::Usage(e.to_string()),
            PipelineError::Scene(crate::scene::SceneError::Io { .. }) => CliError::Usage(e.to_string()),
            PipelineError::Render(crate::render::RenderError::Io { .. }) => CliError::Usage(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<AssetError> for CliError {
    fn from(e: AssetError) -> Self {
        match e {
            AssetError::Io(..) | AssetError::Parse { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<QaError> for CliError {
    fn from(e: QaError) -> Self {
        PipelineError::Qa(e).into()
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Io { .. } | EvalError::Parse { .. } | EvalError::InvalidBins(_) | EvalError::NoTrials => {
                CliError::Usage(e.to_string())
            }
        }
    }
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::Auth { .. } | ClientError::MissingKey { .. } | ClientError::Provider { .. } => {
                CliError::External(e.to_string())
            }
            ClientError::Io { .. } | ClientError::Config(_) => CliError::Usage(e.to_string()),
            ClientError::Stage { .. } => CliError::Validation(e.to_string()),
        }
    }
}

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<(), CliError> {
    if let Some(d) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(d).map_err(|e| io(d, e))?;
    }
    crate::canonical::write_pretty(path, v).map_err(|e| io(path, e))
}

/// Overrides fields of the parsed command with the config file's values.
/// Each key replaces the first field of that name, searching the global
/// flags first and then inward through the subcommand.
fn apply_config(cli: Cli, path: &Path) -> Result<Cli, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
    let overrides: serde_json::Map<String, Value> = serde_json::from_str(&text).map_err(|e| io(path, e))?;
    let mut tree = serde_json::to_value(&cli).expect("cli serializes");
    fn set(v: &mut Value, key: &str, val: &Value) -> bool {
        let Value::Object(m) = v else { return false };
        if let Some(slot) = m.get_mut(key) {
            *slot = val.clone();
            return true;
        }
        m.values_mut().any(|c| set(c, key, val))
    }
    for (k, val) in &overrides {
        let key = k.replace('-', "_");
        if key == "config" || !set(&mut tree, &key, val) {
            return Err(CliError::Usage(format!("{}: `{k}` is not a flag of this command", path.display())));
        }
    }
    serde_json::from_value(tree).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct Snapshot<'a> {
    version: &'static str,
    argv: Vec<String>,
    resolved: &'a Cli,
}

/// Resolved-config snapshot written beside the output as
/// `<out>.run_config.json`, for files and directories alike (a snapshot
/// inside a scene directory would be read back as a scene).
fn snapshot(cli: &Cli, argv: &[OsString], out: &Path) -> Result<(), CliError> {
    let mut s = out.as_os_str().to_owned();
    s.push(".run_config.json");
    let path = PathBuf::from(s);
    let snap = Snapshot {
        version: env!("CARGO_PKG_VERSION"),
        argv: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
        resolved: cli,
    };
    write_json(&path, &snap)
}

fn provider(args: &EndpointArgs, dataset: &[qa::QuestionInstance]) -> Result<(Box<dyn ChatProvider>, String, Option<ModelEndpoint>), CliError> {
    if let Some(m) = &args.mock {
        let fx = MockFixture::load(m)?;
        return Ok((Box::new(MockProvider::new(fx).with_dataset(dataset)), "mock".into(), None));
    }
    let Some(name) = &args.endpoint else {
        return Err(CliError::Usage("one of --endpoint or --mock is required".into()));
    };
    let text = std::fs::read_to_string(&args.endpoints).map_err(|e| io(&args.endpoints, e))?;
    let list: Vec<ModelEndpoint> = serde_json::from_str(&text).map_err(|e| io(&args.endpoints, e))?;
    let ep = list
        .into_iter()
        .find(|e| &e.name == name)
        .ok_or_else(|| CliError::Usage(format!("no endpoint named `{name}` in {}", args.endpoints.display())))?;
    let model = ep.model_name.clone();
    Ok((Box::new(HttpProvider::new(ep.clone())?), model, Some(ep)))
}

fn resolve_scenes(assets: &Path, scenes: &Path) -> Result<(AssetLibrary, Vec<ResolvedScene>), CliError> {
    let lib = load_asset_library(assets)?;
    let raw = pipeline::load_scenes(scenes)?;
    let resolved = raw
        .into_iter()
        .map(|s| ResolvedScene::new(s, &lib).map_err(|e| CliError::from(PipelineError::Scene(e))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((lib, resolved))
}

fn read_dataset(path: &Path) -> Result<Vec<qa::QuestionInstance>, CliError> {
    Ok(qa::read_jsonl(path)?)
}

fn parse_curve(spec: &str) -> Result<(Axis, Vec<f64>), CliError> {
    let (axis, edges) = match spec.split_once('=') {
        Some((a, e)) => (a, Some(e)),
        None => (spec, None),
    };
    let axis: Axis = axis.parse().map_err(CliError::Usage)?;
    let edges = match edges {
        Some(e) => e
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad bin edge `{x}` in `{spec}`"))))
            .collect::<Result<Vec<_>, _>>()?,
        None => axis.default_edges(),
    };
    Ok((axis, edges))
}

fn dispatch(cli: &Cli, argv: &[OsString]) -> Result<(), CliError> {
    let seed = cli.seed;
    match &cli.command {
        Command::Assets { cmd: AssetsCmd::Validate { manifest, out } } => {
            let lib = load_asset_library(manifest)?;
            let v = verify_tag_library(&lib);
            for x in &v {
                println!("{:?} {:?} {}: {}", x.severity(), x.kind, x.subject, x.detail);
            }
            if let Some(o) = out {
                write_json(o, &v)?;
                snapshot(cli, argv, o)?;
            }
            let errors = v.iter().filter(|x| x.severity() == Severity::Error).count();
            println!("{} violations, {errors} errors", v.len());
            if errors > 0 {
                return Err(CliError::Validation(format!("{errors} error-severity tag violations")));
            }
        }
        Command::Assets { cmd: AssetsCmd::Tag(a) } => {
            let lib = load_asset_library(&a.manifest)?;
            let (prov, _, _) = provider(&a.endpoint, &[])?;
            std::fs::create_dir_all(&a.out).map_err(|e| io(&a.out, e))?;
            snapshot(cli, argv, &a.out)?;
            let mut manifest: Manifest = lib.to_manifest();
            let cats: Vec<String> = match &a.category {
                Some(c) => vec![c.clone()],
                None => lib.categories().map(|c| c.name.clone()).filter(|c| !lib.assets_in(c).is_empty()).collect(),
            };
            for cat in cats {
                let mut previews = Vec::new();
                for asset in lib.assets_in(&cat) {
                    let image = match &asset.preview {
                        Some(p) => {
                            let path = lib.base_dir().join(p);
                            image::open(&path).map_err(|e| io(&path, e))?.to_rgb8()
                        }
                        None => render_asset_preview(&lib, &asset.asset_id, 256)?,
                    };
                    previews.push(AssetPreview { asset_id: asset.asset_id.clone(), image });
                }
                let out = match osd_tag_category(&cat, &previews, prov.as_ref(), seed) {
                    Ok(o) => o,
                    Err(e @ ClientError::Stage { .. }) => {
                        if let ClientError::Stage { raw, transcript, .. } = &e {
                            let failed = a.out.join(format!("osd_{cat}_failed.json"));
                            write_json(&failed, &serde_json::json!({"raw": raw, "transcript": transcript}))?;
                        }
                        return Err(e.into());
                    }
                    Err(e) => return Err(e.into()),
                };
                for f in &out.flags {
                    log::warn!("{f}");
                }
                write_json(&a.out.join(format!("osd_{cat}.json")), &out)?;
                manifest = apply_osd_output(&manifest, &out);
            }
            write_json(&a.out.join("manifest.json"), &manifest)?;
            let tagged = AssetLibrary::from_manifest(manifest, lib.base_dir())?;
            let v = verify_tag_library(&tagged);
            write_json(&a.out.join("violations.json"), &v)?;
            let errors = v.iter().filter(|x| x.severity() == Severity::Error).count();
            println!("tagged library: {} violations, {errors} errors", v.len());
            if errors > 0 {
                return Err(CliError::Validation(format!("{errors} error-severity tag violations")));
            }
        }
        Command::Scene { cmd: SceneCmd::Gen(a) } => {
            let lib = load_asset_library(&a.assets)?;
            let themes = pipeline::load_themes(&a.themes, &lib)?;
            let scenes = pipeline::generate_scenes(&themes, &lib, a.count, seed)?;
            pipeline::save_scenes(&scenes, &a.out)?;
            snapshot(cli, argv, &a.out)?;
            println!("{} scenes written to {}", scenes.len(), a.out.display());
        }
        Command::Render(a) => {
            let (_, scenes) = resolve_scenes(&a.assets, &a.scenes)?;
            let spec = pipeline::load_view_spec(&a.views)?;
            let opts = RenderOptions { n_rays: a.n_rays, seed };
            std::fs::create_dir_all(&a.out).map_err(|e| io(&a.out, e))?;
            scenes
                .par_iter()
                .map(|s| pipeline::render_scene(s, &spec, &opts).and_then(|r| pipeline::save_render(&r, &a.out)))
                .collect::<Result<Vec<()>, _>>()?;
            snapshot(cli, argv, &a.out)?;
            println!("{} scenes rendered to {}", scenes.len(), a.out.display());
        }
        Command::Qa { cmd: QaCmd::Gen(a) } => {
            let lib = load_asset_library(&a.assets)?;
            let templates = qa::load_templates(&a.templates)?;
            let mut targets = pipeline::load_targets(&a.targets)?;
            if let Some(l) = a.supervision {
                targets.supervision_level = Some(l);
                targets.validate()?;
            }
            let params = RelationParams::default();
            let prepared = pipeline::prepare_scenes(pipeline::load_scenes(&a.scenes)?, &lib, &a.render, &params)?;
            let inputs: Vec<qa::SceneInput> = prepared.iter().map(pipeline::PreparedScene::input).collect();
            let ds = qa::generate_dataset(&inputs, &lib, &templates, &targets, &params, seed)?;
            if let Some(d) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(d).map_err(|e| io(d, e))?;
            }
            qa::write_jsonl(&a.out, &ds.questions)?;
            let mut sf = a.out.as_os_str().to_owned();
            sf.push(".shortfall.txt");
            std::fs::write(&sf, ds.shortfall_report()).map_err(|e| io(Path::new(&sf), e))?;
            snapshot(cli, argv, &a.out)?;
            print!("{}", ds.shortfall_report());
            println!("{} questions written to {}", ds.questions.len(), a.out.display());
        }
        Command::Qa { cmd: QaCmd::Verify(a) } => {
            let data = read_dataset(&a.data)?;
            let (_, scenes) = resolve_scenes(&a.assets, &a.scenes)?;
            let params = RelationParams::default();
            let mut meta = std::collections::BTreeMap::new();
            for s in &scenes {
                meta.insert(s.scene_id().to_string(), pipeline::load_metadata(&a.render, s.scene_id())?);
            }
            let by_id: std::collections::BTreeMap<&str, &ResolvedScene> = scenes.iter().map(|s| (s.scene_id(), s)).collect();
            let failures: Vec<(String, String)> = data
                .par_iter()
                .filter_map(|q| {
                    let r = match (by_id.get(q.scene_id.as_str()), meta.get(&q.scene_id)) {
                        (Some(s), Some(m)) => crate::verify::check_question(q, s, m, &params),
                        _ => Err(format!("scene `{}` not found", q.scene_id)),
                    };
                    r.err().map(|e| (q.qid.clone(), e))
                })
                .collect();
            for (qid, why) in &failures {
                println!("FAIL {qid}: {why}");
            }
            println!("{} of {} questions verified", data.len() - failures.len(), data.len());
            if !failures.is_empty() {
                return Err(CliError::Validation(format!("{} questions failed verification", failures.len())));
            }
        }
        Command::Bench { cmd: BenchCmd::Run(a) } => {
            let data = read_dataset(&a.data)?;
            let (prov, model, ep) = provider(&a.endpoint, &data)?;
            let mut opts = match &ep {
                Some(e) => BenchOptions::from_endpoint(e, a.mode, seed, &a.images),
                None => BenchOptions::new(a.mode, seed, &a.images),
            };
            if let Some(c) = a.max_concurrency {
                opts.max_concurrency = c;
            }
            opts.transcript = Some(a.transcript.clone().unwrap_or_else(|| {
                let mut s = a.out.as_os_str().to_owned();
                s.push(".transcript.jsonl");
                PathBuf::from(s)
            }));
            opts.resume = a.resume;
            if let Some(d) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(d).map_err(|e| io(d, e))?;
            }
            let out = run_benchmark(&data, prov.as_ref(), &model, &opts)?;
            eval::write_predictions(&a.out, &out.predictions)?;
            snapshot(cli, argv, &a.out)?;
            let missing = out.predictions.iter().filter(|p| p.answer.is_none()).count();
            println!("{} predictions ({} resumed, {missing} missing) written to {}", out.predictions.len(), out.resumed, a.out.display());
        }
        Command::Eval { cmd: EvalCmd::Score(a) } => {
            let data = read_dataset(&a.data)?;
            let preds = eval::read_predictions(&a.preds)?;
            let mut report = eval::score(&data, &preds);
            let scores = eval::score_questions(&data, &preds);
            let dir = a.out.parent().map(Path::to_path_buf).unwrap_or_default();
            if !a.curves.is_empty() && !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
            }
            for spec in &a.curves {
                let (axis, edges) = parse_curve(spec)?;
                let filter = if a.no_filter { eval::CurveFilter::default() } else { axis.default_filter() };
                let rows = eval::difficulty_curves(&data, &scores, axis, &edges, &filter)?;
                let name = format!("curves_{}.csv", format!("{axis:?}").to_lowercase());
                eval::write_curve_csv(dir.join(name), &rows)?;
                report.buckets.extend(rows);
            }
            write_json(&a.out, &report)?;
            std::fs::write(a.out.with_extension("txt"), report.to_table()).map_err(|e| io(&a.out, e))?;
            snapshot(cli, argv, &a.out)?;
            print!("{}", report.to_table());
        }
        Command::Eval { cmd: EvalCmd::Baseline(a) } => {
            let data = read_dataset(&a.data)?;
            let report = match a.kind {
                BaselineKind::Chance => eval::baseline_chance(&data, seed, a.trials)?,
                BaselineKind::Frequency => eval::baseline_frequency(&data, seed, a.trials)?,
            };
            if let Some(o) = &a.out {
                write_json(o, &report)?;
                snapshot(cli, argv, o)?;
            }
            print!("{}", report.to_table());
        }
        Command::Stats(a) => {
            let data = read_dataset(&a.data)?;
            let s = eval::dataset_stats(&data);
            write_json(&a.out, &s)?;
            snapshot(cli, argv, &a.out)?;
            println!(
                "{} questions; MCQ position deviation {:.2} pts",
                data.len(),
                s.mcq_positions.max_deviation
            );
        }
        Command::Pipeline(a) => {
            let mut cfg = PipelineConfig::demo(&a.out);
            cfg.global_seed = seed;
            let pick = |v: &Option<PathBuf>, d: PathBuf| v.clone().unwrap_or(d);
            cfg.assets = pick(&a.assets, cfg.assets);
            cfg.themes = pick(&a.themes, cfg.themes);
            cfg.views = pick(&a.views, cfg.views);
            cfg.templates = pick(&a.templates, cfg.templates);
            cfg.targets = pick(&a.targets, cfg.targets);
            cfg.scenes_per_theme = a.scenes_per_theme.unwrap_or(cfg.scenes_per_theme);
            cfg.n_rays = a.n_rays.unwrap_or(cfg.n_rays);
            let out = pipeline::run_pipeline(&cfg)?;
            snapshot(cli, argv, &a.out)?;
            print!("{}", out.dataset.shortfall_report());
            println!(
                "{} scenes, {} questions written to {}",
                out.scenes,
                out.dataset.questions.len(),
                out.dataset_path.display()
            );
        }
    }
    Ok(())
}

/// Parses `argv` (program name first) and runs it. Returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    let cli = match &cli.config {
        Some(p) => match apply_config(Cli { config: None, ..cli }, &p.clone()) {
            Ok(mut c) => {
                c.config = Some(p.clone());
                c
            }
            Err(e) => {
                eprintln!("error: {e}");
                return e.exit_code();
            }
        },
        None => cli,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match pool.install(|| dispatch(&cli, &argv)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
