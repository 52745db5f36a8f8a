//! Asset records with real-world dimensions, grouped into categories that
//! carry a hierarchical tag library.
//!
//! The manifest is a JSON document:
//!
//! ```json
//! {
//!   "categories": [
//!     {"name": "crate", "comparison_keys": ["color", "material"],
//!      "tags": [{"id": "crate.color.red", "level": 1, "text": "red"}]}
//!   ],
//!   "assets": [
//!     {"asset_id": "crate_red", "category": "crate", "display_name": "red crate",
//!      "dims": [0.6, 0.6, 0.5], "has_front": false, "shape": {"kind": "box"},
//!      "tags": ["crate.color.red"]}
//!   ]
//! }
//! ```
//!
//! `dims` are `[width, depth, height]` in meters. Depth runs along the local
//! forward axis (+x), width along local y. Mesh shapes use
//! `{"kind": "mesh", "path": "relative/to/manifest.obj"}` with the mesh origin
//! at the center of the object's base.

mod obj;
mod tags;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::geometry::TriMesh;

pub use obj::{load_obj_mesh, parse_obj, write_obj_mesh};
pub use tags::{verify_tag_library, Severity, TagViolation, ViolationKind, MAX_TAG_LEVEL};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssetError {
    #[error("cannot read {0}: {1}")]
    Io(String, String),
    #[error("manifest parse error at line {line}, column {column} (field `{field}`): {message}")]
    Parse { line: usize, column: usize, field: String, message: String },
    #[error("asset `{asset_id}`: {reason}")]
    InvalidAsset { asset_id: String, reason: String },
    #[error("category `{category}`: {reason}")]
    InvalidCategory { category: String, reason: String },
    #[error("tag `{tag_id}`: {reason}")]
    InvalidTag { tag_id: String, reason: String },
    #[error("unknown tag `{0}`")]
    UnknownTag(String),
    #[error("unknown asset `{0}`")]
    UnknownAsset(String),
    #[error("OBJ line {line}: {message}")]
    Obj { line: usize, message: String },
    #[error("OBJ line {line}: face index {index} out of range")]
    ObjIndex { line: usize, index: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TagEntry {
    pub id: String,
    pub level: u32,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRecord {
    pub name: String,
    #[serde(default)]
    pub comparison_keys: Vec<String>,
    #[serde(default)]
    pub tags: Vec<TagEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Dims {
    pub width: f64,
    pub depth: f64,
    pub height: f64,
}

impl From<[f64; 3]> for Dims {
    fn from(a: [f64; 3]) -> Self {
        Dims { width: a[0], depth: a[1], height: a[2] }
    }
}

impl From<Dims> for [f64; 3] {
    fn from(d: Dims) -> Self {
        [d.width, d.depth, d.height]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AssetShape {
    Box,
    Mesh { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetRecord {
    pub asset_id: String,
    pub category: String,
    pub display_name: String,
    pub dims: Dims,
    pub has_front: bool,
    pub shape: AssetShape,
    #[serde(default)]
    pub tags: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preview: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub categories: Vec<CategoryRecord>,
    #[serde(default)]
    pub assets: Vec<AssetRecord>,
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Manifest, AssetError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            AssetError::Parse {
                line: inner.line(),
                column: inner.column(),
                field,
                message: inner.to_string(),
            }
        })
    }
}

/// Validated, immutable asset library. Mesh files load on first use.
#[derive(Debug)]
pub struct AssetLibrary {
    base_dir: PathBuf,
    categories: BTreeMap<String, CategoryRecord>,
    assets: BTreeMap<String, AssetRecord>,
    /// tag id → (category, level)
    tag_index: BTreeMap<String, (String, u32)>,
    meshes: BTreeMap<String, OnceLock<Result<Arc<TriMesh>, AssetError>>>,
}

pub fn load_asset_library(manifest_path: impl AsRef<Path>) -> Result<AssetLibrary, AssetError> {
    let path = manifest_path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| AssetError::Io(path.display().to_string(), e.to_string()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    AssetLibrary::from_manifest(Manifest::from_json(&text)?, base)
}

impl AssetLibrary {
    pub fn from_manifest(manifest: Manifest, base_dir: impl Into<PathBuf>) -> Result<AssetLibrary, AssetError> {
        let mut categories = BTreeMap::new();
        let mut tag_index = BTreeMap::new();
        for cat in manifest.categories {
            if cat.name.trim().is_empty() {
                return Err(AssetError::InvalidCategory { category: cat.name, reason: "empty name".into() });
            }
            if let Some(k) = cat.comparison_keys.iter().find(|k| k.trim().is_empty()) {
                return Err(AssetError::InvalidCategory {
                    category: cat.name.clone(),
                    reason: format!("empty comparison key {k:?}"),
                });
            }
            for t in &cat.tags {
                if t.id.trim().is_empty() {
                    return Err(AssetError::InvalidTag { tag_id: t.id.clone(), reason: "empty id".into() });
                }
                if t.level == 0 {
                    return Err(AssetError::InvalidTag { tag_id: t.id.clone(), reason: "level must be ≥ 1".into() });
                }
                if tag_index.insert(t.id.clone(), (cat.name.clone(), t.level)).is_some() {
                    return Err(AssetError::InvalidTag { tag_id: t.id.clone(), reason: "duplicate tag id".into() });
                }
            }
            let name = cat.name.clone();
            if categories.insert(name.clone(), cat).is_some() {
                return Err(AssetError::InvalidCategory { category: name, reason: "declared twice".into() });
            }
        }
        let mut assets = BTreeMap::new();
        let mut meshes = BTreeMap::new();
        for a in manifest.assets {
            let d = a.dims;
            if !(d.width > 0.0 && d.depth > 0.0 && d.height > 0.0) || ![d.width, d.depth, d.height].iter().all(|v| v.is_finite()) {
                return Err(AssetError::InvalidAsset {
                    asset_id: a.asset_id.clone(),
                    reason: format!("dims must be strictly positive, got [{}, {}, {}]", d.width, d.depth, d.height),
                });
            }
            if !categories.contains_key(&a.category) {
                return Err(AssetError::InvalidAsset {
                    asset_id: a.asset_id.clone(),
                    reason: format!("undeclared category `{}`", a.category),
                });
            }
            if let AssetShape::Mesh { .. } = a.shape {
                meshes.insert(a.asset_id.clone(), OnceLock::new());
            }
            let id = a.asset_id.clone();
            if assets.insert(id.clone(), a).is_some() {
                return Err(AssetError::InvalidAsset { asset_id: id, reason: "duplicate asset_id".into() });
            }
        }
        Ok(AssetLibrary { base_dir: base_dir.into(), categories, assets, tag_index, meshes })
    }

    pub fn empty() -> AssetLibrary {
        AssetLibrary::from_manifest(Manifest::default(), PathBuf::new()).expect("empty manifest is valid")
    }

    pub fn to_manifest(&self) -> Manifest {
        Manifest {
            categories: self.categories.values().cloned().collect(),
            assets: self.assets.values().cloned().collect(),
        }
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn asset(&self, id: &str) -> Option<&AssetRecord> {
        self.assets.get(id)
    }

    pub fn assets(&self) -> impl Iterator<Item = &AssetRecord> {
        self.assets.values()
    }

    pub fn category(&self, name: &str) -> Option<&CategoryRecord> {
        self.categories.get(name)
    }

    pub fn categories(&self) -> impl Iterator<Item = &CategoryRecord> {
        self.categories.values()
    }

    pub fn assets_in(&self, category: &str) -> Vec<&AssetRecord> {
        self.assets.values().filter(|a| a.category == category).collect()
    }

    pub fn tag(&self, id: &str) -> Option<&TagEntry> {
        let (cat, _) = self.tag_index.get(id)?;
        self.categories.get(cat)?.tags.iter().find(|t| t.id == id)
    }

    pub fn tag_category(&self, id: &str) -> Option<&str> {
        self.tag_index.get(id).map(|(c, _)| c.as_str())
    }

    /// Number of assets per category, including declared empty categories.
    pub fn census(&self) -> BTreeMap<String, usize> {
        let mut out: BTreeMap<String, usize> = self.categories.keys().map(|k| (k.clone(), 0)).collect();
        for a in self.assets.values() {
            *out.entry(a.category.clone()).or_default() += 1;
        }
        out
    }

    /// Mesh geometry for mesh-shaped assets, loaded on first request.
    pub fn mesh(&self, asset_id: &str) -> Result<Option<Arc<TriMesh>>, AssetError> {
        let asset = self.assets.get(asset_id).ok_or_else(|| AssetError::UnknownAsset(asset_id.into()))?;
        let AssetShape::Mesh { path } = &asset.shape else { return Ok(None) };
        let cell = &self.meshes[asset_id];
        cell.get_or_init(|| load_obj_mesh(self.base_dir.join(path)).map(Arc::new))
            .clone()
            .map(Some)
    }
}

/// Assets carrying every required tag (and in `category`, when given), in
/// ascending asset_id order.
pub fn query_assets_by_tags(
    lib: &AssetLibrary,
    required_tags: &BTreeSet<String>,
    category: Option<&str>,
) -> Result<Vec<String>, AssetError> {
    if let Some(t) = required_tags.iter().find(|t| !lib.tag_index.contains_key(*t)) {
        return Err(AssetError::UnknownTag(t.clone()));
    }
    Ok(lib
        .assets
        .values()
        .filter(|a| category.is_none_or(|c| a.category == c))
        .filter(|a| required_tags.is_subset(&a.tags))
        .map(|a| a.asset_id.clone())
        .collect())
}


#[cfg(test)]
mod tests {
    use super::fixtures::THREE_ASSETS;
    use super::*;

    fn lib() -> AssetLibrary {
        AssetLibrary::from_manifest(Manifest::from_json(THREE_ASSETS).unwrap(), ".").unwrap()
    }

    #[test]
    fn empty_manifest() {
        let l = AssetLibrary::from_manifest(Manifest::from_json("{}").unwrap(), ".").unwrap();
        assert_eq!(l.assets().count(), 0);
        assert!(l.census().is_empty());
    }

    #[test]
    fn negative_dims_name_the_asset() {
        let text = r#"{"categories":[{"name":"c","tags":[]}],
          "assets":[{"asset_id":"bad_one","category":"c","display_name":"x","dims":[0.5,0.5,-1],
          "has_front":false,"shape":{"kind":"box"}}]}"#;
        let err = AssetLibrary::from_manifest(Manifest::from_json(text).unwrap(), ".").unwrap_err();
        match err {
            AssetError::InvalidAsset { asset_id, .. } => assert_eq!(asset_id, "bad_one"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_position_and_field() {
        let text = "{\"assets\": [\n {\"asset_id\": \"a\", \"category\": \"c\", \"display_name\": \"x\",\n \"dims\": \"wide\"}]}";
        match Manifest::from_json(text).unwrap_err() {
            AssetError::Parse { line, field, .. } => {
                assert_eq!(line, 3);
                assert!(field.contains("dims"), "{field}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn census_matches_fixture() {
        let expected: BTreeMap<String, usize> = [("crate".to_string(), 2), ("person".to_string(), 1)].into();
        assert_eq!(lib().census(), expected);
    }

    #[test]
    fn queries() {
        let l = lib();
        let all = query_assets_by_tags(&l, &BTreeSet::new(), None).unwrap();
        assert_eq!(all, vec!["crate_a", "crate_b", "person_a"]);
        let red: BTreeSet<String> = ["crate.red".to_string()].into();
        assert_eq!(query_assets_by_tags(&l, &red, None).unwrap(), vec!["crate_a"]);
        assert_eq!(query_assets_by_tags(&l, &red, Some("person")).unwrap(), Vec::<String>::new());
        let unknown: BTreeSet<String> = ["nope".to_string()].into();
        assert_eq!(query_assets_by_tags(&l, &unknown, None), Err(AssetError::UnknownTag("nope".into())));
    }

    #[test]
    fn conjunctive_query_matches_linear_scan() {
        let l = lib();
        let tags = ["crate.wooden", "crate.red", "crate.blue", "person.standing"];
        for mask in 0..16u32 {
            let req: BTreeSet<String> =
                tags.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, t)| t.to_string()).collect();
            let mut want = Vec::new();
            for a in l.assets() {
                if req.iter().all(|t| a.tags.contains(t)) {
                    want.push(a.asset_id.clone());
                }
            }
            assert_eq!(query_assets_by_tags(&l, &req, None).unwrap(), want);
        }
    }

    #[test]
    fn mesh_assets_load_lazily() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("tri.obj"), "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        let text = r#"{"categories":[{"name":"c","tags":[]}],
          "assets":[{"asset_id":"m","category":"c","display_name":"x","dims":[1,1,1],
          "has_front":false,"shape":{"kind":"mesh","path":"tri.obj"}}]}"#;
        let l = AssetLibrary::from_manifest(Manifest::from_json(text).unwrap(), dir.path()).unwrap();
        let m = l.mesh("m").unwrap().unwrap();
        assert_eq!(m.triangles.len(), 1);
    }
}
