//! Monte Carlo occlusion on a half-covered box as the ray budget grows,
//! then per-view visibility for one rendered demo scene.
//!
//! cargo run --release --example occlusion

use sparseview::assets::load_asset_library;
use sparseview::pipeline::{generate_scene, load_themes, load_view_spec, render_scene, PipelineConfig};
use sparseview::render::{compute_occlusion, fixtures, RenderOptions};
use sparseview::scene::ResolvedScene;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let y0 = 0.1;
    let (scene, cam) = fixtures::half_cover(Some(y0));
    println!("half-covered box, closed form {:.4}", fixtures::half_cover_expected(y0));
    for n in [64, 256, 1024, 4096, 16384] {
        println!("  {n:>6} rays  {:.4}", compute_occlusion(&scene, &cam, "target", n, 7)?);
    }

    let cfg = PipelineConfig::demo("unused");
    let lib = load_asset_library(&cfg.assets)?;
    let theme = &load_themes(&cfg.themes, &lib)?[0];
    let scene = ResolvedScene::new(generate_scene(theme, &lib, 0, cfg.global_seed)?, &lib)?;
    let spec = load_view_spec(&cfg.views)?;
    let r = render_scene(&scene, &spec, &RenderOptions { n_rays: cfg.n_rays, seed: cfg.global_seed })?;
    println!("\n{}", r.metadata.scene_id);
    for v in &r.metadata.views {
        println!("  view {} ({:?})", v.view_id, v.class);
        for m in r.metadata.objects.iter().filter(|m| m.view_id == v.view_id && m.in_frustum) {
            let b = m.bbox2.map(|b| format!("[{:.0}, {:.0}, {:.0}, {:.0}]", b.x_min, b.y_min, b.x_max, b.y_max)).unwrap_or_default();
            println!("    {:<16} occlusion {:.2}  {b}", m.instance_id, m.occlusion_ratio);
        }
    }
    Ok(())
}
