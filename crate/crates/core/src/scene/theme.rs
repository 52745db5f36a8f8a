use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::relations::RelationLabel;

fn default_scale() -> [f64; 2] {
    [1.0, 1.0]
}

fn default_overlap_tolerance() -> f64 {
    1e-4
}

fn default_max_attempts() -> u32 {
    1000
}

/// Designer-authored theme: floor, object specs and admissible relations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThemeConfig {
    pub theme_id: String,
    pub floor: FloorSpec,
    /// Multiplier applied to every sampled object count.
    #[serde(default = "default_scale")]
    pub scale_range: [f64; 2],
    #[serde(default)]
    pub object_specs: Vec<ObjectSpec>,
    #[serde(default)]
    pub lighting: Lighting,
    /// Largest admissible footprint overlap between vertically overlapping
    /// objects, m².
    #[serde(default = "default_overlap_tolerance")]
    pub overlap_tolerance: f64,
    /// Rejection-sampling budget per object.
    #[serde(default = "default_max_attempts")]
    pub max_attempts: u32,
}

/// Floor rectangle centered on the origin at z = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorSpec {
    /// (x_size, y_size) in meters.
    pub extent: [f64; 2],
    pub material_tag: String,
}

/// Carried as metadata; geometry ignores it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lighting {
    pub intensity: f64,
    pub azimuth: f64,
}

impl Default for Lighting {
    fn default() -> Self {
        Lighting { intensity: 1.0, azimuth: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub category: String,
    pub count: CountSpec,
    pub placement: Placement,
    #[serde(default)]
    pub anchor_relations: Vec<AnchorRelation>,
    /// Restricts asset choice to assets carrying all of these tags.
    #[serde(default)]
    pub required_tags: BTreeSet<String>,
    /// Turn each instance toward its anchor instead of a random heading.
    #[serde(default)]
    pub face_anchor: bool,
}

/// Either a fixed count (`3`) or an inclusive range (`[1, 4]`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CountSpec {
    Fixed(u32),
    Range([u32; 2]),
}

impl CountSpec {
    pub fn bounds(&self) -> (u32, u32) {
        match *self {
            CountSpec::Fixed(n) => (n, n),
            CountSpec::Range([lo, hi]) => (lo, hi),
        }
    }
}

/// Grid cells are filled row-major. Cell `(row, col)` sits at
/// `x = center.x + (col − (cols−1)/2)·spacing.x`,
/// `y = center.y + (row − (rows−1)/2)·spacing.y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Placement {
    Grid {
        rows: u32,
        cols: u32,
        spacing: [f64; 2],
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        yaw: f64,
    },
    Stochastic {
        /// Minimum free gap kept around the footprint, meters.
        clearance: f64,
    },
}

/// Relation labels admissible as layout anchors. `Near` constrains distance
/// only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnchorLabel {
    Front,
    Back,
    Left,
    Right,
    FrontLeft,
    FrontRight,
    BackLeft,
    BackRight,
    On,
    Near,
}

impl AnchorLabel {
    /// The object-centric label this anchor requires, if horizontal.
    pub fn horizontal(self) -> Option<RelationLabel> {
        Some(match self {
            AnchorLabel::Front => RelationLabel::Front,
            AnchorLabel::Back => RelationLabel::Back,
            AnchorLabel::Left => RelationLabel::Left,
            AnchorLabel::Right => RelationLabel::Right,
            AnchorLabel::FrontLeft => RelationLabel::FrontLeft,
            AnchorLabel::FrontRight => RelationLabel::FrontRight,
            AnchorLabel::BackLeft => RelationLabel::BackLeft,
            AnchorLabel::BackRight => RelationLabel::BackRight,
            AnchorLabel::On | AnchorLabel::Near => return None,
        })
    }
}

/// "The new object is `relation_label` of an instance of `target_category`,
/// with horizontal center distance inside `distance_range`."
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorRelation {
    pub relation_label: AnchorLabel,
    pub target_category: String,
    pub distance_range: [f64; 2],
}

impl ThemeConfig {
    pub fn from_json(text: &str) -> Result<ThemeConfig, serde_json::Error> {
        serde_json::from_str(text)
    }
}
