use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::AssetLibrary;

/// Deepest tag level accepted without a warning.
pub const MAX_TAG_LEVEL: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViolationKind {
    MissingComparisonKeys,
    EmptyTagLevel,
    UnknownTagAssigned,
    UntaggedAsset,
    OrphanTag,
    /// A tag declared deeper than [`MAX_TAG_LEVEL`].
    ExcessTagLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl ViolationKind {
    pub fn severity(self) -> Severity {
        match self {
            ViolationKind::OrphanTag | ViolationKind::ExcessTagLevel => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TagViolation {
    pub kind: ViolationKind,
    /// asset_id for asset-level kinds, category name (or tag id for
    /// `OrphanTag`) otherwise.
    pub subject: String,
    pub detail: String,
}

impl TagViolation {
    pub fn severity(&self) -> Severity {
        self.kind.severity()
    }
}

/// Mechanical checks over the tag library:
///
/// * every category with two or more assets declares comparison keys;
/// * no level between 1 and the deepest declared level is empty, and every
///   asset carries at least one level-1 tag of its own category;
/// * every assigned tag belongs to the asset's category library, and every
///   library tag is assigned to at least one asset (warning only).
pub fn verify_tag_library(lib: &AssetLibrary) -> Vec<TagViolation> {
    let mut out = Vec::new();
    let census = lib.census();
    let mut used: BTreeSet<&str> = BTreeSet::new();

    for cat in lib.categories() {
        let n_assets = census.get(&cat.name).copied().unwrap_or(0);
        if n_assets >= 2 && cat.comparison_keys.is_empty() {
            out.push(TagViolation {
                kind: ViolationKind::MissingComparisonKeys,
                subject: cat.name.clone(),
                detail: format!("{n_assets} assets but no comparison keys"),
            });
        }
        let mut per_level: BTreeMap<u32, usize> = BTreeMap::new();
        for t in &cat.tags {
            *per_level.entry(t.level).or_default() += 1;
            if t.level > MAX_TAG_LEVEL {
                out.push(TagViolation {
                    kind: ViolationKind::ExcessTagLevel,
                    subject: cat.name.clone(),
                    detail: format!("tag `{}` at level {}", t.id, t.level),
                });
            }
        }
        let deepest = per_level.keys().next_back().copied().unwrap_or(0);
        let want_levels = if n_assets > 0 { deepest.max(1) } else { deepest };
        for level in 1..=want_levels {
            if !per_level.contains_key(&level) {
                out.push(TagViolation {
                    kind: ViolationKind::EmptyTagLevel,
                    subject: cat.name.clone(),
                    detail: format!("level {level} has no tags"),
                });
            }
        }
    }

    for asset in lib.assets() {
        let mut has_level_one = false;
        for t in &asset.tags {
            match lib.tag(t) {
                Some(entry) if lib.tag_category(t) == Some(asset.category.as_str()) => {
                    used.insert(t.as_str());
                    has_level_one |= entry.level == 1;
                }
                Some(_) => out.push(TagViolation {
                    kind: ViolationKind::UnknownTagAssigned,
                    subject: asset.asset_id.clone(),
                    detail: format!("tag `{t}` belongs to another category"),
                }),
                None => out.push(TagViolation {
                    kind: ViolationKind::UnknownTagAssigned,
                    subject: asset.asset_id.clone(),
                    detail: format!("tag `{t}` is not in the library"),
                }),
            }
        }
        if !has_level_one {
            out.push(TagViolation {
                kind: ViolationKind::UntaggedAsset,
                subject: asset.asset_id.clone(),
                detail: "no level-1 tag".into(),
            });
        }
    }

    for cat in lib.categories() {
        for t in &cat.tags {
            if !used.contains(t.id.as_str()) {
                out.push(TagViolation {
                    kind: ViolationKind::OrphanTag,
                    subject: t.id.clone(),
                    detail: format!("declared in `{}` but assigned to no asset", cat.name),
                });
            }
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::THREE_ASSETS;
    use super::super::Manifest;
    use super::*;

    fn lib_from(text: &str) -> AssetLibrary {
        AssetLibrary::from_manifest(Manifest::from_json(text).unwrap(), ".").unwrap()
    }

    #[test]
    fn consistent_fixture_is_clean() {
        assert_eq!(verify_tag_library(&lib_from(THREE_ASSETS)), vec![]);
    }

    #[test]
    fn unknown_tag_is_reported_once() {
        let text = THREE_ASSETS.replace(r#""tags": ["person.standing"]"#, r#""tags": ["person.standing", "blue_roof"]"#);
        let v = verify_tag_library(&lib_from(&text));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::UnknownTagAssigned);
        assert_eq!(v[0].subject, "person_a");
    }

    #[test]
    fn five_assets_without_keys_and_one_untagged() {
        let mut assets = Vec::new();
        for i in 0..5 {
            let tags = if i == 4 { "[]" } else { r#"["box.plain"]"# };
            assets.push(format!(
                r#"{{"asset_id":"b{i}","category":"box","display_name":"b","dims":[1,1,1],"has_front":false,"shape":{{"kind":"box"}},"tags":{tags}}}"#
            ));
        }
        let text = format!(
            r#"{{"categories":[{{"name":"box","tags":[{{"id":"box.plain","level":1,"text":"plain"}}]}}],"assets":[{}]}}"#,
            assets.join(",")
        );
        let kinds: Vec<ViolationKind> = verify_tag_library(&lib_from(&text)).into_iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![ViolationKind::MissingComparisonKeys, ViolationKind::UntaggedAsset]);
    }

    #[test]
    fn orphan_and_gap_levels() {
        let text = r#"{"categories":[{"name":"c","comparison_keys":["k"],"tags":[
            {"id":"c.a","level":1,"text":"a"},{"id":"c.deep","level":3,"text":"d"},
            {"id":"c.x","level":5,"text":"x"}]}],
          "assets":[{"asset_id":"a1","category":"c","display_name":"a","dims":[1,1,1],"has_front":false,
            "shape":{"kind":"box"},"tags":["c.a","c.deep","c.x"]},
            {"asset_id":"a2","category":"c","display_name":"a","dims":[1,1,1],"has_front":false,
            "shape":{"kind":"box"},"tags":["c.a"]}]}"#;
        let v = verify_tag_library(&lib_from(text));
        let levels: Vec<_> = v.iter().filter(|v| v.kind == ViolationKind::EmptyTagLevel).map(|v| v.detail.clone()).collect();
        assert_eq!(levels, vec!["level 2 has no tags", "level 4 has no tags"]);
        assert!(v.iter().any(|v| v.kind == ViolationKind::ExcessTagLevel && v.severity() == Severity::Warning));
        let orphan_text = text.replace(r#""tags":["c.a","c.deep","c.x"]"#, r#""tags":["c.a","c.x"]"#);
        let v = verify_tag_library(&lib_from(&orphan_text));
        assert!(v.iter().any(|v| v.kind == ViolationKind::OrphanTag && v.subject == "c.deep"));
    }
}
