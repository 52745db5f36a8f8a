//! Deterministic multi-view spatial-reasoning data engine.
//!
//! Pipeline: asset library → themed scene sampling → camera placement and
//! ray-cast metadata → relation graphs → grounded question generation →
//! scoring. Every random stream derives from one global seed.

pub mod assets;
pub mod canonical;
pub mod cli;
pub mod client;
pub mod eval;
pub mod geometry;
pub mod pipeline;
pub mod qa;
pub mod relations;
pub mod render;
pub mod scene;
pub mod seed;
pub mod verify;
