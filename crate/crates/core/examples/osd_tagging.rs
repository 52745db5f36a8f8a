//! Overview, library and assignment stages of OSD tagging for the demo
//! chairs, driven by scripted mock replies, then the tag-library checks on
//! the result.
//!
//! cargo run --release --example osd_tagging

use std::collections::BTreeMap;

use sparseview::assets::{load_asset_library, verify_tag_library, AssetLibrary};
use sparseview::client::{
    apply_osd_output, osd_tag_category, render_asset_preview, AssetPreview, MockFixture, MockMode, MockProvider,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lib = load_asset_library(concat!(env!("CARGO_MANIFEST_DIR"), "/data/demo/assets.json"))?;
    let previews: Vec<AssetPreview> = lib
        .assets_in("chair")
        .iter()
        .map(|a| Ok(AssetPreview { asset_id: a.asset_id.clone(), image: render_asset_preview(&lib, &a.asset_id, 96)? }))
        .collect::<Result<_, sparseview::assets::AssetError>>()?;

    let replies: BTreeMap<String, String> = [
        ("osd:stage1", r#"{"category": "chair", "comparison_keys": ["material", "armrests"]}"#),
        (
            "osd:stage2",
            r#"{"tags": [{"id": "chair.wooden", "level": 1, "text": "wooden"},
                         {"id": "chair.metal", "level": 1, "text": "metal"},
                         {"id": "chair.armed", "level": 2, "text": "has armrests"}]}"#,
        ),
        ("osd:stage3", r#"{"tags": ["chair.wooden"]}"#),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .chain(
        // per-asset replies take precedence over the stage default
        previews
            .iter()
            .filter(|p| p.asset_id.contains("metal"))
            .map(|p| (format!("osd:stage3:{}", p.asset_id), r#"{"tags": ["chair.metal", "chair.armed"]}"#.to_string())),
    )
    .collect();
    let mock = MockProvider::new(MockFixture { mode: MockMode::Scripted, replies, ..Default::default() });

    let out = osd_tag_category("chair", &previews, &mock, 42)?;
    println!("reported category {:?}, keys {:?}", out.reported_name, out.category.comparison_keys);
    for (asset, tags) in &out.assignments {
        println!("  {asset}: {tags:?}");
    }
    println!("{} model calls, flags {:?}", out.transcript.len(), out.flags);

    let tagged = AssetLibrary::from_manifest(apply_osd_output(&lib.to_manifest(), &out), lib.base_dir())?;
    for v in verify_tag_library(&tagged).iter().filter(|v| v.subject.starts_with("chair")) {
        println!("  {:?} {:?} {}: {}", v.severity(), v.kind, v.subject, v.detail);
    }
    Ok(())
}
