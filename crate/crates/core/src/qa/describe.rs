use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assets::AssetLibrary;
use crate::scene::{ResolvedScene, SceneObject};

/// A tag query naming one category plus the tags that must all be present.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Description {
    pub category: String,
    #[serde(default)]
    pub tags: Vec<String>,
}

impl Description {
    pub fn matches(&self, o: &SceneObject) -> bool {
        o.category == self.category && self.tags.iter().all(|t| o.tags.contains(t))
    }

    /// Noun phrase without article, e.g. "red wooden crate".
    pub fn text(&self, lib: &AssetLibrary) -> String {
        // finer (higher-level) tags read first: "red wooden crate"
        let mut tags: Vec<(std::cmp::Reverse<u32>, &str, String)> = self
            .tags
            .iter()
            .map(|t| match lib.tag(t) {
                Some(e) => (std::cmp::Reverse(e.level), t.as_str(), e.text.clone()),
                None => (std::cmp::Reverse(0), t.as_str(), t.replace('_', " ")),
            })
            .collect();
        tags.sort();
        let mut words: Vec<String> = tags.into_iter().map(|(_, _, text)| text).collect();
        words.push(self.category.replace('_', " "));
        words.join(" ")
    }
}

/// Naive English plural of a noun phrase (inflects the last word).
pub fn plural(phrase: &str) -> String {
    let phrase = phrase.replace('_', " ");
    let (head, noun) = match phrase.rsplit_once(' ') {
        Some((h, n)) => (format!("{h} "), n.to_string()),
        None => (String::new(), phrase.clone()),
    };
    let n = noun.as_str();
    let inflected = match n {
        "person" => "people".into(),
        "shelf" => "shelves".into(),
        _ if n.ends_with('s') || n.ends_with('x') || n.ends_with("ch") || n.ends_with("sh") => format!("{n}es"),
        _ if n.ends_with('y') && !n.ends_with("ay") && !n.ends_with("ey") && !n.ends_with("oy") => {
            format!("{}ies", &n[..n.len() - 1])
        }
        _ => format!("{n}s"),
    };
    head + &inflected
}

const MAX_DESCRIPTION_TAGS: usize = 3;

/// Shortest tag query (ties broken lexicographically) that resolves to
/// exactly one object, per instance. Objects that no query of at most three
/// tags singles out are absent.
pub fn describe_objects(scene: &ResolvedScene) -> BTreeMap<String, Description> {
    let mut out = BTreeMap::new();
    for o in &scene.objects {
        let peers: Vec<&SceneObject> =
            scene.objects.iter().filter(|p| p.category == o.category && p.instance_id != o.instance_id).collect();
        let tags: Vec<&String> = o.tags.iter().collect();
        'sizes: for size in 0..=MAX_DESCRIPTION_TAGS.min(tags.len()) {
            let mut subsets = Vec::new();
            combinations(tags.len(), size, &mut Vec::new(), 0, &mut subsets);
            for idx in subsets {
                let d = Description { category: o.category.clone(), tags: idx.iter().map(|&i| tags[i].clone()).collect() };
                if !peers.iter().any(|p| d.matches(p)) {
                    out.insert(o.instance_id.clone(), d);
                    break 'sizes;
                }
            }
        }
    }
    out
}

fn combinations(n: usize, k: usize, cur: &mut Vec<usize>, start: usize, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in start..n {
        cur.push(i);
        combinations(n, k, cur, i + 1, out);
        cur.pop();
    }
}
