//! Themes → scenes → renders → questions for the bundled demo, then a
//! verification pass over every question.
//!
//! cargo run --release --example full_pipeline -- [out_dir] [scenes_per_theme]

use sparseview::pipeline::{load_scenes, prepare_scenes, run_pipeline, task_counts, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "target/demo_run".into());
    let mut cfg = PipelineConfig::demo(&out);
    if let Some(n) = args.next() {
        cfg.scenes_per_theme = n.parse()?;
    }
    let t0 = std::time::Instant::now();
    let run = run_pipeline(&cfg)?;
    println!("{} scenes, {:?} in {:.1?}", run.scenes, task_counts(&run.dataset), t0.elapsed());
    print!("{}", run.dataset.shortfall_report());

    let lib = sparseview::assets::load_asset_library(&cfg.assets)?;
    let scenes = prepare_scenes(load_scenes(cfg.out.join("scenes"))?, &lib, cfg.out.join("render"), &cfg.relation_params)?;
    let failed = run
        .dataset
        .questions
        .iter()
        .filter(|q| {
            let s = scenes.iter().find(|s| s.resolved.scene_id() == q.scene_id).expect("scene on disk");
            !sparseview::verify::verify_answer(q, &s.resolved, &s.metadata)
        })
        .count();
    println!("verify: {failed} failures over {}", run.dataset.questions.len());
    if let Some(q) = run.dataset.questions.first() {
        println!("{}\n  options {:?}\n  answer {:?}", q.text, q.options, q.answer);
    }
    Ok(())
}
