//! Instantiate every demo template on one scene and print the first
//! question of each with level-4 supervision for the first one.
//!
//! cargo run --release --example qa_generation

use sparseview::assets::load_asset_library;
use sparseview::pipeline::{generate_scene, load_themes, load_view_spec, render_scene, PipelineConfig, PreparedScene};
use sparseview::qa::{emit_supervision, instantiate_question, load_templates, SceneContext};
use sparseview::render::RenderOptions;
use sparseview::scene::ResolvedScene;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = PipelineConfig::demo("unused");
    let lib = load_asset_library(&cfg.assets)?;
    let theme = &load_themes(&cfg.themes, &lib)?[0];
    let scene = ResolvedScene::new(generate_scene(theme, &lib, 0, cfg.global_seed)?, &lib)?;
    let r = render_scene(&scene, &load_view_spec(&cfg.views)?, &RenderOptions { n_rays: cfg.n_rays, seed: cfg.global_seed })?;
    let p = PreparedScene::new(scene, r.metadata, &cfg.relation_params);
    let ctx = SceneContext::new(&p.resolved, &p.metadata, &p.graphs, &lib);

    let mut first = None;
    for t in load_templates(&cfg.templates)? {
        match instantiate_question(&t, &ctx, cfg.global_seed) {
            Some(q) => {
                println!("[{}] {}", t.template_id, q.text);
                if let Some(o) = &q.options {
                    println!("    options {o:?}");
                }
                println!("    answer {:?}  D = {:.2}  visibility {:.2}", q.answer, q.reasoning_difficulty, q.visibility_difficulty);
                first.get_or_insert(q);
            }
            None => println!("[{}] no binding in this scene", t.template_id),
        }
    }
    if let Some(q) = first {
        let trace = emit_supervision(&q, &ctx, 4)?;
        println!("\nsupervision for {}:\n{}", q.qid, serde_json::to_string_pretty(&trace)?);
    }
    Ok(())
}
