use std::collections::BTreeSet;

use super::{PlanStep, QaError};
use crate::relations::{bfs_distances, Frame, RelationGraph, RelationGraphs};

/// Weight of the log₂(N) structural term.
pub const LOG_WEIGHT: f64 = 1.0;

/// Objects mentioned anywhere in the plan.
pub fn plan_objects(plan: &[PlanStep]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for s in plan {
        match s {
            PlanStep::Ground { objects } => out.extend(objects.iter().cloned()),
            PlanStep::Hop { from, to, .. } => {
                out.insert(from.clone());
                out.extend(to.iter().cloned());
            }
            PlanStep::Aggregate | PlanStep::Localize { .. } => {}
        }
    }
    out
}

fn graph_for<'a>(graphs: &'a RelationGraphs, frame: &Frame) -> Option<&'a RelationGraph> {
    match frame {
        Frame::ObjectCentric => Some(&graphs.object_centric),
        Frame::CameraCentric(v) => graphs.camera(v),
    }
}

/// Hop count H of a resolved plan: one per grounding step plus, per hop,
/// the largest BFS distance from its source to any of its targets (1 when
/// the target set is empty).
pub fn hop_count(plan: &[PlanStep], graphs: &RelationGraphs) -> Result<usize, QaError> {
    let mut h = 0;
    for (i, s) in plan.iter().enumerate() {
        match s {
            PlanStep::Ground { .. } => h += 1,
            PlanStep::Hop { frame, from, to, .. } => {
                let g = graph_for(graphs, frame)
                    .ok_or_else(|| QaError::Unresolvable { step: i, reason: format!("no graph for {frame:?}") })?;
                if to.is_empty() {
                    h += 1;
                    continue;
                }
                let dist = bfs_distances(g, from);
                let mut worst = 0;
                for t in to {
                    let d = *dist
                        .get(t)
                        .ok_or_else(|| QaError::Unresolvable { step: i, reason: format!("{t} unreachable from {from}") })?;
                    worst = worst.max(d);
                }
                h += worst;
            }
            PlanStep::Aggregate | PlanStep::Localize { .. } => {}
        }
    }
    Ok(h)
}

/// D = H + LOG_WEIGHT · log₂(max(N, 1)) with N the number of objects in the
/// resolved chain.
pub fn reasoning_difficulty(plan: &[PlanStep], graphs: &RelationGraphs) -> Result<f64, QaError> {
    let h = hop_count(plan, graphs)?;
    let n = plan_objects(plan).len().max(1);
    Ok(h as f64 + LOG_WEIGHT * (n as f64).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relations::{Edge, RelationLabel};

    fn graphs(n: usize, pairs: &[(usize, usize)]) -> RelationGraphs {
        let nodes: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
        let edges = pairs
            .iter()
            .map(|&(a, b)| Edge { subject: nodes[a].clone(), object: nodes[b].clone(), label: RelationLabel::Front })
            .collect();
        RelationGraphs { object_centric: RelationGraph::new(Frame::ObjectCentric, nodes, edges), camera_centric: vec![] }
    }

    fn ground(ids: &[&str]) -> PlanStep {
        PlanStep::Ground { objects: ids.iter().map(|s| s.to_string()).collect() }
    }

    fn hop(from: &str, to: &[&str]) -> PlanStep {
        PlanStep::Hop {
            label: RelationLabel::Front,
            frame: Frame::ObjectCentric,
            from: from.into(),
            to: to.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn worked_values() {
        let g = graphs(4, &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(reasoning_difficulty(&[ground(&["n0"])], &g).unwrap(), 1.0);
        // H = 2 grounds, N = 4
        let d = reasoning_difficulty(&[ground(&["n0", "n1"]), ground(&["n2", "n3"])], &g).unwrap();
        assert_eq!(d, 4.0);
        // H = 1 ground + 1 hop, N = 3
        let d = reasoning_difficulty(&[ground(&["n0"]), hop("n1", &["n2"])], &g).unwrap();
        assert!((d - (2.0 + 3f64.log2())).abs() < 1e-12);
        // BFS distance, not edge presence
        let d = reasoning_difficulty(&[ground(&["n0"]), hop("n0", &["n3"])], &g).unwrap();
        assert_eq!(d, 4.0 + 1.0);
    }

    #[test]
    fn unreachable_is_an_error() {
        let g = graphs(3, &[(0, 1)]);
        assert!(matches!(reasoning_difficulty(&[hop("n0", &["n2"])], &g), Err(QaError::Unresolvable { .. })));
    }

    #[test]
    fn appending_a_hop_never_lowers_difficulty() {
        let g = graphs(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        let mut plan = vec![ground(&["n0"])];
        let mut last = reasoning_difficulty(&plan, &g).unwrap();
        for (a, b) in [("n0", "n2"), ("n2", "n2"), ("n3", "n4"), ("n1", "n3")] {
            plan.push(hop(a, &[b]));
            let d = reasoning_difficulty(&plan, &g).unwrap();
            assert!(d >= last);
            last = d;
        }
    }
}
