//! Object-centric labels around a reference pose, then the relation graphs
//! of a demo scene and hop distances from one object.
//!
//! cargo run --release --example relations

use sparseview::assets::load_asset_library;
use sparseview::geometry::{Pose3, Vec3};
use sparseview::pipeline::{generate_scene, load_themes, load_view_spec, render_scene, PipelineConfig};
use sparseview::relations::{bfs_distances, build_relation_graphs, object_centric_label, RelationParams};
use sparseview::render::RenderOptions;
use sparseview::scene::ResolvedScene;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // reference faces +y
    let reference = Pose3::new(Vec3::new(0.0, 0.0, 0.0), std::f64::consts::FRAC_PI_2);
    let params = RelationParams::default();
    for deg in (0..360).step_by(45) {
        let a = (deg as f64).to_radians();
        let other = Vec3::new(a.cos(), a.sin(), 0.0);
        println!("object at {deg:>3}° → {:?}", object_centric_label(&reference, other, &params));
    }

    let cfg = PipelineConfig::demo("unused");
    let lib = load_asset_library(&cfg.assets)?;
    let theme = &load_themes(&cfg.themes, &lib)?[0];
    let scene = ResolvedScene::new(generate_scene(theme, &lib, 0, cfg.global_seed)?, &lib)?;
    let r = render_scene(&scene, &load_view_spec(&cfg.views)?, &RenderOptions { n_rays: 256, seed: cfg.global_seed })?;
    let graphs = build_relation_graphs(&scene, &r.metadata.views, &r.metadata.objects, &cfg.relation_params);

    let oc = &graphs.object_centric;
    println!("\n{}: {} object-centric edges", scene.scene_id(), oc.edges.len());
    for e in oc.edges.iter().take(12) {
        println!("  {} is {:?} of {}", e.subject, e.label, e.object);
    }
    for g in &graphs.camera_centric {
        println!("  camera-centric, view {:?}: {} edges", g.frame, g.edges.len());
    }
    let source = &scene.objects[0].instance_id;
    println!("\nhops from {source}: {:?}", bfs_distances(oc, source));
    Ok(())
}
