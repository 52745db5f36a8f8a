use super::instantiate::{is_visible, SceneContext};
use super::{Claim, Evidence, PlanStep, QaError, QuestionInstance, SupervisionTrace, Task, TraceStep};
use crate::relations::Frame;

fn name(ctx: &SceneContext, id: &str) -> String {
    match ctx.descriptions.get(id) {
        Some(d) => d.text(ctx.lib),
        None => ctx.scene.object(id).map_or_else(|| id.to_string(), |o| o.category.replace('_', " ")),
    }
}

fn image_no(q: &QuestionInstance, view_id: &str) -> usize {
    q.view_ids.iter().position(|v| v == view_id).map_or(0, |i| i + 1)
}

fn evidence(q: &QuestionInstance, ctx: &SceneContext, ids: &[&str]) -> Vec<Evidence> {
    let mut out = Vec::new();
    for id in ids {
        for v in &q.view_ids {
            if !is_visible(ctx.metadata, v, id) {
                continue;
            }
            if let Some(b) = ctx.metadata.get(v, id).and_then(|m| m.bbox2) {
                out.push(Evidence { view_id: v.clone(), instance_id: id.to_string(), bbox: b });
            }
        }
    }
    out
}

/// Instance a detection plan localizes: the end of the last hop, or the
/// grounded object when there is no hop.
pub(crate) fn localized(q: &QuestionInstance) -> Option<&str> {
    let mut out = None;
    for s in &q.program.plan {
        match s {
            PlanStep::Ground { objects } if out.is_none() => out = objects.first().map(String::as_str),
            PlanStep::Hop { to, .. } => out = to.first().map(String::as_str),
            _ => {}
        }
    }
    out
}

fn answer_text(q: &QuestionInstance) -> String {
    match q.task {
        Task::Mcq => {
            let i = q.gt_index().unwrap_or(0);
            let opt = q.options.as_ref().and_then(|o| o.get(i)).cloned().unwrap_or_default();
            format!("The answer is {} ({opt}).", (b'A' + i as u8) as char)
        }
        Task::Counting => format!("The count is {}.", q.answer.as_int().unwrap_or(0)),
        Task::Detection => {
            let views: Vec<String> = q.answer.boxes().iter().map(|g| format!("image {}", image_no(q, &g.view_id))).collect();
            format!("Report its box in {}.", views.join(", "))
        }
    }
}

/// Supervision at the requested granularity. Level 1 is the answer alone;
/// 2 adds step texts; 3 adds cross-view identity statements and a
/// machine-checkable claim per step; 4 attaches per-view boxes for every
/// object a step refers to.
pub fn emit_supervision(q: &QuestionInstance, ctx: &SceneContext, level: u8) -> Result<SupervisionTrace, QaError> {
    if !(1..=4).contains(&level) {
        return Err(QaError::InvalidLevel(level));
    }
    let final_answer = q.answer.clone();
    if level == 1 {
        return Ok(SupervisionTrace { level, steps: vec![], final_answer });
    }
    let claims = level >= 3;
    let boxes = level >= 4;
    let mut steps = Vec::new();
    let mut counted: Vec<String> = Vec::new();
    // counting plans ground the counted set last
    let set_ground = if q.task == Task::Counting {
        q.program.plan.iter().rposition(|s| matches!(s, PlanStep::Ground { .. }))
    } else {
        None
    };
    for (si, s) in q.program.plan.iter().enumerate() {
        match s {
            PlanStep::Ground { objects } => {
                let ids: Vec<&str> = objects.iter().map(String::as_str).collect();
                let text = match ids.as_slice() {
                    [one] if set_ground != Some(si) => format!("Find the {} in the images.", name(ctx, one)),
                    _ if set_ground == Some(si) => {
                        counted = objects.clone();
                        let what = q.program.category.as_ref().map_or_else(|| "matching object".into(), |d| d.text(ctx.lib));
                        format!("Find every {what} across the images.")
                    }
                    _ => {
                        let names: Vec<String> = ids.iter().map(|id| format!("the {}", name(ctx, id))).collect();
                        format!("Find {} in the images.", names.join(", "))
                    }
                };
                steps.push(TraceStep { text, evidence: if boxes { evidence(q, ctx, &ids) } else { vec![] }, claim: None });
                if claims {
                    for id in &ids {
                        let seen: Vec<String> =
                            q.view_ids.iter().filter(|v| is_visible(ctx.metadata, v, id)).cloned().collect();
                        let nos: Vec<String> = seen.iter().map(|v| image_no(q, v).to_string()).collect();
                        let (text, claim) = if seen.len() >= 2 {
                            (
                                format!("The {} visible in images {} is one and the same instance.", name(ctx, id), nos.join(" and ")),
                                Claim::SameInstance { instance_id: id.to_string(), view_ids: seen },
                            )
                        } else if let Some(v) = seen.first() {
                            (
                                format!("The {} is visible only in image {}.", name(ctx, id), nos[0]),
                                Claim::VisibleIn { instance_id: id.to_string(), view_id: v.clone() },
                            )
                        } else {
                            continue;
                        };
                        steps.push(TraceStep {
                            text,
                            evidence: if boxes { evidence(q, ctx, &[id]) } else { vec![] },
                            claim: Some(claim),
                        });
                    }
                }
            }
            PlanStep::Hop { label, frame, from, to } => {
                let prefix = match frame {
                    Frame::ObjectCentric => String::new(),
                    Frame::CameraCentric(v) => format!("In image {}, ", image_no(q, v)),
                };
                if to.is_empty() {
                    let what = q.program.category.as_ref().map_or_else(|| "object".into(), |d| d.text(ctx.lib));
                    steps.push(TraceStep {
                        text: format!("{prefix}no {what} is {} the {}.", label.phrase(), name(ctx, from)),
                        evidence: if boxes { evidence(q, ctx, &[from]) } else { vec![] },
                        claim: None,
                    });
                }
                for t in to {
                    let text = format!("{prefix}the {} is {} the {}.", name(ctx, t), label.phrase(), name(ctx, from));
                    let mut chars = text.chars();
                    let text = chars.next().map_or(String::new(), |c| c.to_uppercase().collect::<String>() + chars.as_str());
                    steps.push(TraceStep {
                        text,
                        evidence: if boxes { evidence(q, ctx, &[t, from]) } else { vec![] },
                        claim: claims.then(|| Claim::Relation {
                            subject: t.clone(),
                            object: from.clone(),
                            label: *label,
                            frame: frame.clone(),
                        }),
                    });
                }
                if q.task == Task::Counting {
                    counted = to.clone();
                }
            }
            PlanStep::Aggregate => {
                let ids: Vec<&str> = counted.iter().map(String::as_str).collect();
                steps.push(TraceStep {
                    text: format!("Counting each instance once across views gives {}.", counted.len()),
                    evidence: if boxes { evidence(q, ctx, &ids) } else { vec![] },
                    claim: claims.then(|| Claim::Count { members: counted.clone(), value: counted.len() as u64 }),
                });
            }
            PlanStep::Localize { views } => {
                let target: Vec<&str> = localized(q).into_iter().collect();
                let nos: Vec<String> = views.iter().map(|v| image_no(q, v).to_string()).collect();
                let who = target.first().map_or_else(String::new, |t| name(ctx, t));
                steps.push(TraceStep {
                    text: format!("Localize the {who} in images {}.", nos.join(", ")),
                    evidence: if boxes { evidence(q, ctx, &target) } else { vec![] },
                    claim: None,
                });
            }
        }
    }
    steps.push(TraceStep { text: answer_text(q), evidence: vec![], claim: None });
    Ok(SupervisionTrace { level, steps, final_answer })
}
