//! Conflicts between obligations that share an agent, and ordered plans
//! for resolving them.

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::score_dyad;
use crate::model::{fmt_num, AgencyRequirement, DyadicGraph, HarmEdge, ObligationEdge};
use crate::profile::CultureProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictKind {
    Bottleneck,
    AuthorityParadox,
    StakeholderIntersection,
}

impl ConflictKind {
    pub const ALL: [ConflictKind; 3] = [
        ConflictKind::Bottleneck,
        ConflictKind::AuthorityParadox,
        ConflictKind::StakeholderIntersection,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConflictKind::Bottleneck => "bottleneck",
            ConflictKind::AuthorityParadox => "authority_paradox",
            ConflictKind::StakeholderIntersection => "stakeholder_intersection",
        }
    }

    /// Conflicts that need a structural edit, not just ordering.
    pub fn is_structural(self) -> bool {
        matches!(self, ConflictKind::Bottleneck | ConflictKind::AuthorityParadox)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorityEntry {
    pub obligation_id: String,
    pub agent_id: String,
    pub patient_id: String,
    pub wrongness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum ResolutionStep {
    /// Serve the obligations in this order.
    SequentialStaging { order: Vec<String> },
    /// Route the agent's decision through a review node.
    IntermediaryInsertion { review_node: String, agent_id: String },
    /// Announce in advance that this obligation will yield.
    PrecommitmentCommunication { deviating: String },
}

impl ResolutionStep {
    pub fn name(&self) -> &'static str {
        match self {
            ResolutionStep::SequentialStaging { .. } => "sequential_staging",
            ResolutionStep::IntermediaryInsertion { .. } => "intermediary_insertion",
            ResolutionStep::PrecommitmentCommunication { .. } => "precommitment_communication",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictReport {
    pub kind: ConflictKind,
    pub obligations: Vec<String>,
    /// Highest wrongness first; ties by obligation id.
    pub priority: Vec<PriorityEntry>,
    pub plan: Vec<ResolutionStep>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("obligation `{obligation}`: {role} `{id}` is not a declared entity")]
    Dangling {
        obligation: String,
        role: &'static str,
        id: String,
    },
}

/// Every conflict class the pair `(x, y)` falls into, in [`ConflictKind::ALL`] order.
pub fn pair_conflicts(x: &ObligationEdge, y: &ObligationEdge) -> Vec<ConflictKind> {
    let mut out = Vec::new();
    if x.agent_id != y.agent_id {
        return out;
    }
    let opposite = x.direction != y.direction;
    let excluded = x.excludes.contains(&y.id) || y.excludes.contains(&x.id);
    if (x.action_tag == y.action_tag && opposite) || excluded {
        out.push(ConflictKind::Bottleneck);
    }
    let agency = (x.agency_requirement, y.agency_requirement);
    if matches!(
        agency,
        (AgencyRequirement::Low, AgencyRequirement::High) | (AgencyRequirement::High, AgencyRequirement::Low)
    ) {
        out.push(ConflictKind::AuthorityParadox);
    }
    if x.patient_id == y.patient_id && opposite {
        if let (Some(a), Some(b)) = (&x.demanded_by, &y.demanded_by) {
            if a != b {
                out.push(ConflictKind::StakeholderIntersection);
            }
        }
    }
    out
}

/// Wrongness of the dyad an obligation implies, at full causality.
pub fn obligation_wrongness(ob: &ObligationEdge, graph: &DyadicGraph, profile: &CultureProfile) -> f64 {
    let a = graph.entity(&ob.agent_id).map_or(0.0, |e| e.intentionality);
    let p = graph.entity(&ob.patient_id).map_or(0.0, |e| e.vulnerability);
    score_dyad(a, p, 1.0, profile.k_for(&ob.action_tag), profile.alpha)
}

fn check_refs(obligations: &[ObligationEdge], graph: &DyadicGraph) -> Result<(), PolicyError> {
    for ob in obligations {
        let refs = [
            ("agent", Some(&ob.agent_id)),
            ("patient", Some(&ob.patient_id)),
            ("demanded_by", ob.demanded_by.as_ref()),
        ];
        for (role, id) in refs {
            if let Some(id) = id {
                if graph.entity(id).is_none() {
                    return Err(PolicyError::Dangling {
                        obligation: ob.id.clone(),
                        role,
                        id: id.clone(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Checks every pair of obligations. Reports come in pair order (by
/// position in `obligations`), then by kind.
pub fn detect_conflicts(
    obligations: &[ObligationEdge],
    graph: &DyadicGraph,
    profile: &CultureProfile,
) -> Result<Vec<ConflictReport>, PolicyError> {
    check_refs(obligations, graph)?;
    let mut reports = Vec::new();
    for (i, x) in obligations.iter().enumerate() {
        for y in &obligations[i + 1..] {
            for kind in pair_conflicts(x, y) {
                let mut priority: Vec<PriorityEntry> = [x, y]
                    .into_iter()
                    .map(|ob| PriorityEntry {
                        obligation_id: ob.id.clone(),
                        agent_id: ob.agent_id.clone(),
                        patient_id: ob.patient_id.clone(),
                        wrongness: obligation_wrongness(ob, graph, profile),
                    })
                    .collect();
                priority.sort_by(|a, b| {
                    b.wrongness
                        .total_cmp(&a.wrongness)
                        .then_with(|| a.obligation_id.cmp(&b.obligation_id))
                });
                let mut report = ConflictReport {
                    kind,
                    obligations: vec![x.id.clone(), y.id.clone()],
                    priority,
                    plan: Vec::new(),
                };
                report.plan = plan_resolution(&report, profile);
                reports.push(report);
            }
        }
    }
    Ok(reports)
}

/// Staging by priority, a review node for structural conflicts, then a
/// precommitment that the lowest-priority obligation yields.
pub fn plan_resolution(conflict: &ConflictReport, _profile: &CultureProfile) -> Vec<ResolutionStep> {
    let mut plan = vec![ResolutionStep::SequentialStaging {
        order: conflict.priority.iter().map(|p| p.obligation_id.clone()).collect(),
    }];
    if conflict.kind.is_structural() {
        let agent = conflict.priority.first().map_or(String::new(), |p| p.agent_id.clone());
        plan.push(ResolutionStep::IntermediaryInsertion {
            review_node: format!("review_{agent}"),
            agent_id: agent,
        });
    }
    if let Some(last) = conflict.priority.last() {
        plan.push(ResolutionStep::PrecommitmentCommunication {
            deviating: last.obligation_id.clone(),
        });
    }
    plan
}

/// Marks the yielding obligation's dyad as announced in advance: matching
/// agent-to-patient edges become fully sufficient without the agent. When
/// no such edge exists one is added, named `deviation_<obligation>`.
pub fn apply_precommitment(graph: &DyadicGraph, conflict: &ConflictReport) -> DyadicGraph {
    let mut out = graph.clone();
    let Some(ResolutionStep::PrecommitmentCommunication { deviating }) = conflict.plan.last() else {
        return out;
    };
    let Some(ob) = graph.obligations.iter().find(|o| &o.id == deviating) else {
        return out;
    };
    let mut touched = false;
    for e in &mut out.edges {
        if e.agent_id.as_deref() == Some(&ob.agent_id) && e.patient_id.as_deref() == Some(&ob.patient_id) {
            e.exogenous_sufficiency = 1.0;
            touched = true;
        }
    }
    if !touched {
        let mut id = format!("deviation_{}", ob.id);
        while out.edge(&id).is_some() {
            id.push('_');
        }
        let mut edge = HarmEdge::new(id, &ob.agent_id, &ob.patient_id);
        edge.suffering = graph.entity(&ob.patient_id).map_or(0.0, |p| p.vulnerability);
        edge.exogenous_sufficiency = 1.0;
        edge.act_category = ob.action_tag.clone();
        out.edges.push(edge);
    }
    out
}

/// Structured-text rendering, same conventions as judgment export.
pub fn export_reports(reports: &[ConflictReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "conflicts: {}", reports.len());
    for r in reports {
        let _ = writeln!(out, "conflict {}", r.kind.as_str());
        let _ = writeln!(out, "  obligations: {}", r.obligations.join(", "));
        out.push_str("  priority\n");
        for p in &r.priority {
            let _ = writeln!(
                out,
                "    {} {} -> {}: {}",
                p.obligation_id,
                p.agent_id,
                p.patient_id,
                fmt_num(p.wrongness)
            );
        }
        out.push_str("  plan\n");
        for (i, step) in r.plan.iter().enumerate() {
            let detail = match step {
                ResolutionStep::SequentialStaging { order } => order.join(", "),
                ResolutionStep::IntermediaryInsertion { review_node, agent_id } => {
                    format!("{review_node} before {agent_id}")
                }
                ResolutionStep::PrecommitmentCommunication { deviating } => deviating.clone(),
            };
            let _ = writeln!(out, "    {}. {}: {detail}", i + 1, step.name());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Direction, EntityNode};

    fn ob(id: &str, patient: &str, dir: Direction, tag: &str) -> ObligationEdge {
        ObligationEdge {
            id: id.into(),
            policy_id: id.into(),
            agent_id: "ai".into(),
            patient_id: patient.into(),
            direction: dir,
            action_tag: tag.into(),
            demanded_by: None,
            agency_requirement: AgencyRequirement::None,
            excludes: Vec::new(),
        }
    }

    fn graph() -> DyadicGraph {
        DyadicGraph::new("g")
            .with_entity(EntityNode::individual("ai", 0.7, 0.1))
            .with_entity(EntityNode::individual("user", 0.6, 0.8))
            .with_entity(EntityNode::individual("society", 0.2, 0.5))
            .with_entity(EntityNode::individual("operator", 0.8, 0.3))
    }

    #[test]
    fn helpfulness_safety_bottleneck() {
        let obs = [
            ob("help", "user", Direction::Promote, "answer"),
            ob("guard", "society", Direction::Prevent, "answer"),
        ];
        let r = detect_conflicts(&obs, &graph(), &CultureProfile::default()).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].kind, ConflictKind::Bottleneck);
        let names: Vec<_> = r[0].plan.iter().map(|s| s.name()).collect();
        assert_eq!(
            names,
            ["sequential_staging", "intermediary_insertion", "precommitment_communication"]
        );
        // 0.7 * 0.8 beats 0.7 * 0.5.
        assert_eq!(r[0].priority[0].obligation_id, "help");
    }

    #[test]
    fn authority_paradox() {
        let mut a = ob("defer", "user", Direction::Promote, "defer");
        a.agency_requirement = AgencyRequirement::Low;
        let mut b = ob("decide", "user", Direction::Promote, "decide");
        b.agency_requirement = AgencyRequirement::High;
        let r = detect_conflicts(&[a, b], &graph(), &CultureProfile::default()).unwrap();
        assert_eq!(r.iter().map(|r| r.kind).collect::<Vec<_>>(), [ConflictKind::AuthorityParadox]);
    }

    #[test]
    fn stakeholder_intersection_has_no_review_node() {
        let mut a = ob("a", "user", Direction::Promote, "x");
        a.demanded_by = Some("user".into());
        let mut b = ob("b", "user", Direction::Prevent, "y");
        b.demanded_by = Some("operator".into());
        let r = detect_conflicts(&[a, b], &graph(), &CultureProfile::default()).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].kind, ConflictKind::StakeholderIntersection);
        let names: Vec<_> = r[0].plan.iter().map(|s| s.name()).collect();
        assert_eq!(names, ["sequential_staging", "precommitment_communication"]);
    }

    #[test]
    fn empty_and_tied_sets() {
        assert!(detect_conflicts(&[], &graph(), &CultureProfile::default())
            .unwrap()
            .is_empty());
        let obs = [
            ob("zeta", "user", Direction::Promote, "t"),
            ob("alpha", "user", Direction::Prevent, "t"),
        ];
        let r = detect_conflicts(&obs, &graph(), &CultureProfile::default()).unwrap();
        assert_eq!(r[0].priority[0].obligation_id, "alpha");
        assert_eq!(
            r[0].plan.last(),
            Some(&ResolutionStep::PrecommitmentCommunication {
                deviating: "zeta".into()
            })
        );
    }

    #[test]
    fn dangling_reference_is_an_error() {
        let mut a = ob("a", "user", Direction::Promote, "x");
        a.demanded_by = Some("ghost".into());
        assert!(matches!(
            detect_conflicts(&[a], &graph(), &CultureProfile::default()),
            Err(PolicyError::Dangling { role: "demanded_by", .. })
        ));
    }

    #[test]
    fn excludes_declares_a_bottleneck() {
        let mut a = ob("a", "user", Direction::Promote, "x");
        a.excludes = vec!["b".into()];
        let b = ob("b", "society", Direction::Promote, "y");
        let r = detect_conflicts(&[a, b], &graph(), &CultureProfile::default()).unwrap();
        assert_eq!(r[0].kind, ConflictKind::Bottleneck);
    }

    #[test]
    fn precommitment_turns_deviation_into_tragedy() {
        let mut g = graph();
        g.obligations = vec![
            ob("help", "user", Direction::Promote, "answer"),
            ob("guard", "society", Direction::Prevent, "answer"),
        ];
        let p = CultureProfile::default();
        let reports = detect_conflicts(&g.obligations, &g, &p).unwrap();
        let after = apply_precommitment(&g, &reports[0]);
        let dev = after.edge("deviation_guard").unwrap();
        assert_eq!(dev.exogenous_sufficiency, 1.0);
        let j = crate::engine::judge(&after, &p).unwrap();
        assert_eq!(j.dyad_records[0].classification, crate::model::Classification::Tragedy);
    }
}
