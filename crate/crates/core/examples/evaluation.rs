//! Score the chance and frequency baselines on a small demo split, with
//! difficulty curves and dataset statistics.
//!
//! cargo run --release --example evaluation -- [out_dir]

use sparseview::eval::{baseline_chance, baseline_frequency, dataset_stats, difficulty_curves, score_questions, Axis};
use sparseview::pipeline::{run_pipeline, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/evaluation_demo".into());
    let mut cfg = PipelineConfig::demo(&out);
    cfg.scenes_per_theme = 6;
    let qs = run_pipeline(&cfg)?.dataset.questions;

    let chance = baseline_chance(&qs, 1, 200)?;
    let freq = baseline_frequency(&qs, 1, 200)?;
    println!("chance\n{}\nfrequency\n{}", chance.to_table(), freq.to_table());

    // a constant "no answer" run: every question scores zero, so the curves
    // show bin populations
    let scores = score_questions(&qs, &[]);
    for axis in [Axis::Reasoning, Axis::Visibility] {
        for row in difficulty_curves(&qs, &scores, axis, &axis.default_edges(), &axis.default_filter())? {
            if row.count > 0 {
                println!("{axis:?} {:?} [{:.1}, {:.1}) n={}", row.task, row.bin_lo, row.bin_hi, row.count);
            }
        }
    }

    let st = dataset_stats(&qs);
    println!("\nquestions {:?}", st.questions);
    println!("counting answers {:?}", st.counting_answers);
    println!("MCQ position deviation {:.2} pts", st.mcq_positions.max_deviation);
    Ok(())
}
