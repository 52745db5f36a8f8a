//! Sample one scene per demo theme and list its objects.
//!
//! cargo run --example scene_synthesis -- [seed]

use sparseview::assets::load_asset_library;
use sparseview::pipeline::{generate_scene, load_themes, PipelineConfig};
use sparseview::scene::{validate_scene, ResolvedScene};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(42);
    let cfg = PipelineConfig::demo("unused");
    let lib = load_asset_library(&cfg.assets)?;
    for theme in load_themes(&cfg.themes, &lib)? {
        let scene = generate_scene(&theme, &lib, 0, seed)?;
        let problems = validate_scene(&scene, &lib, &theme);
        println!("{} ({} violations)", scene.scene_id, problems.len());
        let resolved = ResolvedScene::new(scene, &lib)?;
        for o in &resolved.objects {
            let p = o.pose.position;
            println!(
                "  {:<16} {:<22} at ({:6.2}, {:6.2}, {:5.2}) yaw {:6.1}°",
                o.instance_id,
                o.asset_id,
                p.x,
                p.y,
                p.z,
                o.pose.yaw.to_degrees()
            );
        }
    }
    Ok(())
}
