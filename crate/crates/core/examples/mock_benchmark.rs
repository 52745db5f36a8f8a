//! Closed loop against the mock provider: an echo run scores 100, a
//! garbage run exercises every parse fallback, and an injected 429 is
//! retried transparently.
//!
//! cargo run --release --example mock_benchmark -- [out_dir]

use std::time::Duration;

use sparseview::client::{run_benchmark, BenchOptions, MockFault, MockFixture, MockProvider, PromptMode};
use sparseview::eval::score;
use sparseview::pipeline::{run_pipeline, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/mock_benchmark_demo".into());
    let mut cfg = PipelineConfig::demo(&out);
    cfg.scenes_per_theme = 2;
    let qs = run_pipeline(&cfg)?.dataset.questions;
    let mut opts = BenchOptions::new(PromptMode::Thinking, 42, cfg.out.join("render"));
    opts.backoff_base = Duration::from_millis(5);

    let echo = run_benchmark(&qs, &MockProvider::echo(&qs), "mock", &opts)?;
    println!("echo\n{}", score(&qs, &echo.predictions).to_table());

    let garbage = run_benchmark(&qs, &MockProvider::garbage(), "mock", &opts)?;
    let r = score(&qs, &garbage.predictions);
    println!("garbage\n{}{} flagged, e.g. {:?}", r.to_table(), r.flagged.len(), r.flagged.first());

    let fixture = MockFixture {
        faults: vec![MockFault { tag: qs[0].qid.clone(), attempt: 1, status: 429 }],
        ..MockFixture::default()
    };
    let faulty = MockProvider::new(fixture).with_dataset(&qs);
    let retried = run_benchmark(&qs, &faulty, "mock", &opts)?;
    println!(
        "429 on {}: {} requests for {} questions, predictions equal to echo run: {}",
        qs[0].qid,
        faulty.requests(),
        qs.len(),
        retried.predictions == echo.predictions
    );
    Ok(())
}
