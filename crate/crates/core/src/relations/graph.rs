use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{camera_anchor, camera_centric_relations, contact_relation, object_centric_relation, RelationLabel, RelationParams};
use crate::render::{ObjectViewMetadata, ViewRecord};
use crate::scene::ResolvedScene;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "view_id")]
pub enum Frame {
    ObjectCentric,
    CameraCentric(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub subject: String,
    pub object: String,
    pub label: RelationLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationGraph {
    pub frame: Frame,
    pub nodes: Vec<String>,
    pub edges: Vec<Edge>,
}

impl RelationGraph {
    pub fn new(frame: Frame, nodes: Vec<String>, mut edges: Vec<Edge>) -> RelationGraph {
        edges.sort();
        edges.dedup();
        RelationGraph { frame, nodes, edges }
    }

    pub fn has_edge(&self, subject: &str, object: &str, label: RelationLabel) -> bool {
        self.edges.iter().any(|e| e.subject == subject && e.object == object && e.label == label)
    }

    /// Labels of all edges from `subject` to `object`.
    pub fn labels(&self, subject: &str, object: &str) -> Vec<RelationLabel> {
        self.edges.iter().filter(|e| e.subject == subject && e.object == object).map(|e| e.label).collect()
    }

    /// Subjects `s` with an edge `(s, object, label)`.
    pub fn subjects_of(&self, object: &str, label: RelationLabel) -> Vec<&str> {
        self.edges.iter().filter(|e| e.object == object && e.label == label).map(|e| e.subject.as_str()).collect()
    }
}

/// Shortest undirected hop counts from `source` to every reachable node.
pub fn bfs_distances(graph: &RelationGraph, source: &str) -> BTreeMap<String, usize> {
    let index: BTreeMap<&str, usize> = graph.nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut adj = vec![Vec::new(); graph.nodes.len()];
    for e in &graph.edges {
        if let (Some(&a), Some(&b)) = (index.get(e.subject.as_str()), index.get(e.object.as_str())) {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut out = BTreeMap::new();
    let Some(&s) = index.get(source) else { return out };
    let mut dist = vec![usize::MAX; graph.nodes.len()];
    dist[s] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    for (i, d) in dist.into_iter().enumerate() {
        if d != usize::MAX {
            out.insert(graph.nodes[i].clone(), d);
        }
    }
    out
}

pub fn hop_distance(graph: &RelationGraph, from: &str, to: &str) -> Option<usize> {
    bfs_distances(graph, from).get(to).copied()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationGraphs {
    pub object_centric: RelationGraph,
    /// One graph per view, in view order.
    pub camera_centric: Vec<RelationGraph>,
}

impl RelationGraphs {
    pub fn camera(&self, view_id: &str) -> Option<&RelationGraph> {
        self.camera_centric.iter().find(|g| matches!(&g.frame, Frame::CameraCentric(v) if v == view_id))
    }
}

/// Object-centric graph over every pair whose reference has a front, plus
/// contact edges; one camera-centric graph per view over the pairs that
/// are in frustum there.
pub fn build_relation_graphs(
    scene: &ResolvedScene,
    views: &[ViewRecord],
    metadata: &[ObjectViewMetadata],
    params: &RelationParams,
) -> RelationGraphs {
    let nodes: Vec<String> = scene.objects.iter().map(|o| o.instance_id.clone()).collect();
    let mut edges = Vec::new();
    for (i, a) in scene.objects.iter().enumerate() {
        for (j, b) in scene.objects.iter().enumerate() {
            if i == j {
                continue;
            }
            // b seen from a
            if let Some(l) = object_centric_relation(a, b, params) {
                edges.push(Edge { subject: b.instance_id.clone(), object: a.instance_id.clone(), label: l });
            }
            if let Some(l) = contact_relation(a, b, params) {
                edges.push(Edge { subject: a.instance_id.clone(), object: b.instance_id.clone(), label: l });
            }
        }
    }
    let object_centric = RelationGraph::new(Frame::ObjectCentric, nodes.clone(), edges);

    let camera_centric = views
        .iter()
        .map(|view| {
            let eligible: Vec<usize> = scene
                .objects
                .iter()
                .enumerate()
                .filter(|(_, o)| {
                    metadata
                        .iter()
                        .any(|m| m.view_id == view.view_id && m.instance_id == o.instance_id && m.in_frustum)
                        && camera_anchor(&view.camera, o).is_some()
                })
                .map(|(i, _)| i)
                .collect();
            let mut edges = Vec::new();
            for (k, &i) in eligible.iter().enumerate() {
                for &j in &eligible[k + 1..] {
                    let (a, b) = (&scene.objects[i], &scene.objects[j]);
                    let rels = camera_centric_relations(&view.camera, a, b, params).expect("eligible objects project");
                    for (a_is_subject, label) in rels {
                        let (s, o) = if a_is_subject { (a, b) } else { (b, a) };
                        edges.push(Edge { subject: s.instance_id.clone(), object: o.instance_id.clone(), label });
                    }
                }
            }
            RelationGraph::new(Frame::CameraCentric(view.view_id.clone()), nodes.clone(), edges)
        })
        .collect();
    RelationGraphs { object_centric, camera_centric }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, pairs: &[(usize, usize)]) -> RelationGraph {
        let nodes: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
        let edges = pairs
            .iter()
            .map(|&(a, b)| Edge { subject: nodes[a].clone(), object: nodes[b].clone(), label: RelationLabel::Front })
            .collect();
        RelationGraph::new(Frame::ObjectCentric, nodes, edges)
    }

    #[test]
    fn bfs_on_path_and_disconnected() {
        let g = graph(5, &[(0, 1), (2, 1), (2, 3)]);
        assert_eq!(hop_distance(&g, "n0", "n3"), Some(3));
        assert_eq!(hop_distance(&g, "n3", "n0"), Some(3));
        assert_eq!(hop_distance(&g, "n0", "n0"), Some(0));
        assert_eq!(hop_distance(&g, "n0", "n4"), None);
        assert_eq!(hop_distance(&g, "missing", "n0"), None);
    }
}
