//! Load the demo asset library, print the per-category census, query by
//! tags and run the tag-library checks.
//!
//! cargo run --example asset_library -- [assets.json]

use std::collections::BTreeSet;

use sparseview::assets::{load_asset_library, query_assets_by_tags, verify_tag_library};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/demo/assets.json").into());
    let lib = load_asset_library(&path)?;

    for (category, n) in lib.census() {
        let c = lib.category(&category).expect("census lists known categories");
        let tags: Vec<&str> = c.tags.iter().map(|t| t.id.as_str()).collect();
        println!("{category:<14} {n:>2} assets  tags {tags:?}");
    }

    if let Some(tag) = lib.categories().flat_map(|c| c.tags.first()).next() {
        let want: BTreeSet<String> = [tag.id.clone()].into();
        println!("\nassets tagged {}: {:?}", tag.id, query_assets_by_tags(&lib, &want, None)?);
    }

    let violations = verify_tag_library(&lib);
    println!("\n{} tag violations", violations.len());
    for v in violations {
        println!("  {:?} {:?} {}: {}", v.severity(), v.kind, v.subject, v.detail);
    }
    Ok(())
}
