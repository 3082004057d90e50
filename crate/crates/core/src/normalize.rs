//! Rewrites that compress an arbitrary scenario toward dyads: completion
//! of missing endpoints, group collapse with fractional attribution,
//! agentic reduction of institutions and chain decomposition.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{fmt_num, DyadicGraph, EntityKind, EntityNode, HarmEdge, Role, TraceStep};
use crate::profile::{Aggregation, CultureProfile};

pub const COMPLETION: &str = "completion";
pub const COMPRESSION: &str = "compression";
pub const CHAIN: &str = "chain";

pub const DIFFUSE_PATIENT: &str = "society";
pub const SYSTEM_NODE: &str = "system";
pub const SUPERNATURAL_NODE: &str = "supernatural";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormalizeError {
    #[error("cannot collapse an empty member list")]
    EmptyGroup,
    #[error("member `{0}` is not an individual")]
    NonIndividualMember(String),
    #[error("malformed chain at `{0}`: agent does not match the preceding patient")]
    MalformedChain(String),
    #[error("chain names unknown edge `{0}`")]
    UnknownChainEdge(String),
}

/// First latent entity other than `exclude`, in id order.
fn latent_candidate<'a>(graph: &'a DyadicGraph, exclude: Option<&str>) -> Option<&'a str> {
    graph
        .entities
        .values()
        .find(|e| e.latent && Some(e.id.as_str()) != exclude)
        .map(|e| e.id.as_str())
}

/// Existing synthetic node of `kind`, or a new one registered in `graph`.
fn synthetic_node(graph: &mut DyadicGraph, kind: EntityKind, base: &str, a: f64, p: f64) -> String {
    if let Some(e) = graph.entities.values().find(|e| e.synthetic && e.kind == kind) {
        return e.id.clone();
    }
    let id = graph.fresh_id(base);
    let mut node = EntityNode::individual(&id, a, p).with_kind(kind);
    node.synthetic = true;
    graph.insert_entity(node);
    id
}

/// Closes every scored observation into a full dyad.
///
/// A missing patient becomes the first latent entity, else a synthetic
/// diffuse node. A missing agent on an edge with suffering becomes the
/// first latent entity, else a synthetic system node, or a supernatural
/// node when the scenario rules out systemic agents. Agentless edges
/// without suffering stay open and are not scored.
pub fn complete_dyad(graph: &DyadicGraph, profile: &CultureProfile) -> (DyadicGraph, Vec<TraceStep>) {
    let mut out = graph.clone();
    let mut trace = Vec::new();
    for i in 0..out.edges.len() {
        if out.edges[i].patient_id.is_none() {
            let agent = out.edges[i].agent_id.clone();
            let (id, note) = match latent_candidate(&out, agent.as_deref()) {
                Some(id) => (id.to_string(), "latent entity placed as patient"),
                None => (
                    synthetic_node(&mut out, EntityKind::Diffuse, DIFFUSE_PATIENT, 0.0, profile.default_diffuse_p),
                    "diffuse patient inferred",
                ),
            };
            trace.push(TraceStep::new(COMPLETION, &out.edges[i].id, note).after("patient", id.clone()));
            out.edges[i].patient_id = Some(id);
        }
        if out.edges[i].agent_id.is_none() && out.edges[i].suffering > 0.0 {
            let patient = out.edges[i].patient_id.clone();
            let (id, note) = match latent_candidate(&out, patient.as_deref()) {
                Some(id) => (id.to_string(), "latent entity placed as agent"),
                None if out.systemic_agents => (
                    synthetic_node(&mut out, EntityKind::System, SYSTEM_NODE, profile.default_system_a, 0.0),
                    "suffering without agent; blamed on the system",
                ),
                None => (
                    synthetic_node(
                        &mut out,
                        EntityKind::Supernatural,
                        SUPERNATURAL_NODE,
                        profile.default_system_a,
                        0.0,
                    ),
                    "suffering without agent; systemic agents ruled out",
                ),
            };
            trace.push(TraceStep::new(COMPLETION, &out.edges[i].id, note).after("agent", id.clone()));
            out.edges[i].agent_id = Some(id);
        }
    }
    out.mark_applied(COMPLETION);
    (out, trace)
}

/// Max or mean of a nonempty slice.
pub fn aggregate(values: &[f64], how: Aggregation) -> f64 {
    match how {
        Aggregation::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
    }
}

/// Treats `members` as one group node of size `members.len()`.
///
/// Both coordinates are aggregated the same way, so the node serves as
/// agent or patient.
pub fn collapse_group(
    id: &str,
    members: &[EntityNode],
    entitativity: f64,
    how: Aggregation,
) -> Result<EntityNode, NormalizeError> {
    if members.is_empty() {
        return Err(NormalizeError::EmptyGroup);
    }
    if let Some(m) = members.iter().find(|m| m.kind != EntityKind::Individual) {
        return Err(NormalizeError::NonIndividualMember(m.id.clone()));
    }
    let a: Vec<f64> = members.iter().map(|m| m.intentionality).collect();
    let p: Vec<f64> = members.iter().map(|m| m.vulnerability).collect();
    let mut node = EntityNode::individual(id, aggregate(&a, how), aggregate(&p, how))
        .with_kind(EntityKind::Group)
        .with_members(members.iter().map(|m| m.id.clone()).collect());
    node.group_size = members.len() as u64;
    node.entitativity = entitativity;
    Ok(node)
}

/// Effective head count `1 + (n - 1)(1 - e)`.
pub fn effective_size(n: u64, entitativity: f64) -> f64 {
    1.0 + (n.max(1) - 1) as f64 * (1.0 - entitativity)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub per_member: f64,
    pub effective_size: f64,
}

/// Splits a group value across `n` members, diluted by low entitativity.
pub fn dilute(group_value: f64, n: u64, entitativity: f64) -> Attribution {
    let n_eff = effective_size(n, entitativity);
    Attribution {
        per_member: group_value / n_eff,
        effective_size: n_eff,
    }
}

/// Per-member share of the group's role coordinate.
pub fn fractional_attribution(group: &EntityNode, role: Role) -> Attribution {
    let value = match role {
        Role::Agent => group.intentionality,
        Role::Patient => group.vulnerability,
    };
    dilute(value, group.group_size, group.entitativity)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    Proxy(String),
    Ungrounded,
}

/// Picks the member with the highest intentionality as the institution's
/// stand-in (ties go to the smaller id). Memberless institutions are
/// ungrounded.
pub fn agentic_reduction(institution: &EntityNode, graph: &DyadicGraph) -> Reduction {
    institution
        .members
        .iter()
        .filter_map(|m| graph.entity(m))
        .fold(None::<&EntityNode>, |best, m| match best {
            Some(b) if b.intentionality > m.intentionality => Some(b),
            Some(b) if b.intentionality == m.intentionality && b.id <= m.id => Some(b),
            _ => Some(m),
        })
        .map_or(Reduction::Ungrounded, |m| Reduction::Proxy(m.id.clone()))
}

/// Vulnerability an institution presents as a patient: the aggregate of
/// its members, or zero when it has none.
pub fn institution_vulnerability(institution: &EntityNode, graph: &DyadicGraph, how: Aggregation) -> f64 {
    let p: Vec<f64> = institution
        .members
        .iter()
        .filter_map(|m| graph.entity(m))
        .map(|m| m.vulnerability)
        .collect();
    if p.is_empty() {
        0.0
    } else {
        aggregate(&p, how)
    }
}

/// True for an institution with nobody to stand in for it.
pub fn is_ungrounded(entity: &EntityNode) -> bool {
    entity.kind == EntityKind::Institution && entity.members.is_empty()
}

/// Replaces every collective node's values with what its members imply.
///
/// Groups take the aggregate of their members. Institutions take their
/// proxy's intentionality and the aggregate member vulnerability; a
/// memberless institution keeps its intentionality (scored as ungrounded
/// downstream) and presents zero vulnerability.
pub fn compress_collectives(graph: &DyadicGraph, profile: &CultureProfile) -> (DyadicGraph, Vec<TraceStep>) {
    let mut out = graph.clone();
    let mut trace = Vec::new();
    let how = profile.group_aggregation;
    let ids: Vec<String> = graph
        .entities
        .values()
        .filter(|e| e.kind.is_collective())
        .map(|e| e.id.clone())
        .collect();
    for id in ids {
        let node = &graph.entities[&id];
        let (a, p, note) = match node.kind {
            EntityKind::Group => {
                let members: Vec<EntityNode> =
                    node.members.iter().filter_map(|m| graph.entity(m)).cloned().collect();
                match collapse_group(&id, &members, node.entitativity, how) {
                    Ok(g) => (
                        g.intentionality,
                        g.vulnerability,
                        format!("collapsed {} members ({})", members.len(), how.as_str()),
                    ),
                    Err(_) => continue,
                }
            }
            _ => match agentic_reduction(node, graph) {
                Reduction::Proxy(proxy) => (
                    graph.entities[&proxy].intentionality,
                    institution_vulnerability(node, graph, how),
                    format!("proxy `{proxy}`"),
                ),
                Reduction::Ungrounded => (node.intentionality, 0.0, "ungrounded: no members".to_string()),
            },
        };
        let mut step = TraceStep::new(COMPRESSION, &id, note);
        if a != node.intentionality {
            step = step.change("intentionality", node.intentionality, a);
        }
        if p != node.vulnerability {
            step = step.change("vulnerability", node.vulnerability, p);
        }
        let e = out.entities.get_mut(&id).expect("collective present");
        e.intentionality = a;
        e.vulnerability = p;
        trace.push(step);
    }
    out.mark_applied(COMPRESSION);
    (out, trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentCollapse {
    pub removed: String,
    pub rewritten: HarmEdge,
    pub residual_blame: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDecomposition {
    /// Edges to score, each with its 1-based stage.
    pub dyads: Vec<(HarmEdge, u32)>,
    pub instrument_collapses: Vec<InstrumentCollapse>,
}

/// Splits the declared chain into sequential dyads.
///
/// An intermediary below `tool_threshold` is an instrument: its two
/// flanking edges merge into one direct edge whose causality is the
/// product of both and whose outcome fields come from the later edge.
/// The returned graph holds the stage edges in place of the chain edges
/// and an updated `chain_order`.
pub fn decompose_chain(
    graph: &DyadicGraph,
    profile: &CultureProfile,
) -> Result<(ChainDecomposition, DyadicGraph, Vec<TraceStep>), NormalizeError> {
    let mut trace = Vec::new();
    let Some(chain) = &graph.chain_order else {
        return Ok((
            ChainDecomposition {
                dyads: Vec::new(),
                instrument_collapses: Vec::new(),
            },
            graph.clone(),
            trace,
        ));
    };
    let mut edges = Vec::with_capacity(chain.len());
    for id in chain {
        edges.push(
            graph
                .edge(id)
                .cloned()
                .ok_or_else(|| NormalizeError::UnknownChainEdge(id.clone()))?,
        );
    }
    let mut dyads: Vec<HarmEdge> = Vec::new();
    let mut collapses = Vec::new();
    let mut iter = edges.into_iter();
    let mut current = iter.next().ok_or_else(|| NormalizeError::UnknownChainEdge(String::new()))?;
    for next in iter {
        let Some(mid) = current.patient_id.clone().filter(|p| Some(p) == next.agent_id.as_ref()) else {
            return Err(NormalizeError::MalformedChain(next.id));
        };
        let mid_a = graph.entity(&mid).map_or(0.0, |e| e.intentionality);
        if mid_a < profile.tool_threshold {
            let rewritten = HarmEdge {
                id: format!("{}+{}", current.id, next.id),
                agent_id: current.agent_id.clone(),
                patient_id: next.patient_id.clone(),
                causality: current.causality * next.causality,
                valence: next.valence,
                suffering: next.suffering,
                exogenous_sufficiency: next.exogenous_sufficiency,
                act_category: next.act_category.clone(),
            };
            trace.push(
                TraceStep::new(
                    CHAIN,
                    &mid,
                    format!(
                        "instrument below threshold {}; `{}` and `{}` merged into `{}`",
                        fmt_num(profile.tool_threshold),
                        current.id,
                        next.id,
                        rewritten.id
                    ),
                )
                .after("residual_blame", fmt_num(mid_a))
                .change("causality", next.causality, rewritten.causality),
            );
            collapses.push(InstrumentCollapse {
                removed: mid,
                rewritten: rewritten.clone(),
                residual_blame: mid_a,
            });
            current = rewritten;
        } else {
            dyads.push(std::mem::replace(&mut current, next));
        }
    }
    dyads.push(current);

    let mut out = graph.clone();
    let first = out
        .edges
        .iter()
        .position(|e| chain.contains(&e.id))
        .expect("chain edges are in the graph");
    out.edges.retain(|e| !chain.contains(&e.id));
    let staged: Vec<(HarmEdge, u32)> = dyads.into_iter().zip(1u32..).collect();
    for (i, (e, stage)) in staged.iter().enumerate() {
        trace.push(TraceStep::new(CHAIN, &e.id, format!("stage {stage}")));
        out.edges.insert(first + i, e.clone());
    }
    out.chain_order = Some(staged.iter().map(|(e, _)| e.id.clone()).collect());
    out.mark_applied(CHAIN);
    Ok((
        ChainDecomposition {
            dyads: staged,
            instrument_collapses: collapses,
        },
        out,
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{snapshot, validate_graph};

    fn profile() -> CultureProfile {
        CultureProfile::default()
    }

    #[test]
    fn victimless_harm_gains_society() {
        let mut e = HarmEdge::new("e1", "x", "x");
        e.patient_id = None;
        let g = DyadicGraph::new("g").with_entity(EntityNode::individual("x", 0.8, 0.2)).with_edge(e);
        let (out, trace) = complete_dyad(&g, &profile());
        assert_eq!(out.edges[0].patient_id.as_deref(), Some(DIFFUSE_PATIENT));
        let society = &out.entities[DIFFUSE_PATIENT];
        assert_eq!(society.kind, EntityKind::Diffuse);
        assert_eq!(society.vulnerability, profile().default_diffuse_p);
        assert_eq!(trace.len(), 1);
        assert!(validate_graph(&out).is_empty());
    }

    #[test]
    fn agentless_suffering_blames_system_or_supernatural() {
        let mut e = HarmEdge::new("e1", "v", "v");
        e.agent_id = None;
        e.suffering = 0.6;
        let g = DyadicGraph::new("g").with_entity(EntityNode::individual("v", 0.2, 0.9)).with_edge(e);
        let (out, _) = complete_dyad(&g, &profile());
        assert_eq!(out.edges[0].agent_id.as_deref(), Some(SYSTEM_NODE));
        assert_eq!(out.entities[SYSTEM_NODE].intentionality, profile().default_system_a);

        let mut g2 = g.clone();
        g2.systemic_agents = false;
        let (out, _) = complete_dyad(&g2, &profile());
        assert_eq!(out.edges[0].agent_id.as_deref(), Some(SUPERNATURAL_NODE));
        assert!(validate_graph(&out).is_empty());
    }

    #[test]
    fn latent_entities_are_preferred() {
        let mut e = HarmEdge::new("e1", "x", "x");
        e.patient_id = None;
        let g = DyadicGraph::new("g")
            .with_entity(EntityNode::individual("x", 0.8, 0.2))
            .with_entity(EntityNode::individual("hidden", 0.1, 0.7).latent())
            .with_edge(e);
        let (out, _) = complete_dyad(&g, &profile());
        assert_eq!(out.edges[0].patient_id.as_deref(), Some("hidden"));
        assert_eq!(out.entities.len(), 2);
    }

    #[test]
    fn complete_graph_is_untouched_and_completion_is_idempotent() {
        let g = DyadicGraph::new("g")
            .with_entity(EntityNode::individual("x", 0.8, 0.2))
            .with_entity(EntityNode::individual("y", 0.1, 0.9))
            .with_edge(HarmEdge::new("e1", "x", "y"));
        let (out, trace) = complete_dyad(&g, &profile());
        assert!(trace.is_empty());
        assert_eq!(snapshot(&out), snapshot(&g));

        let mut open = g.clone();
        open.edges[0].patient_id = None;
        let (once, _) = complete_dyad(&open, &profile());
        let (twice, trace) = complete_dyad(&once, &profile());
        assert!(trace.is_empty());
        assert_eq!(snapshot(&once), snapshot(&twice));
    }

    #[test]
    fn open_edges_share_one_synthetic_node() {
        let mut e1 = HarmEdge::new("e1", "x", "x");
        e1.patient_id = None;
        let mut e2 = e1.clone();
        e2.id = "e2".into();
        let g = DyadicGraph::new("g")
            .with_entity(EntityNode::individual("x", 0.8, 0.2))
            .with_edge(e1)
            .with_edge(e2);
        let (out, _) = complete_dyad(&g, &profile());
        assert_eq!(out.entities.len(), 2);
    }

    #[test]
    fn collapse_uses_max_by_default() {
        let squad: Vec<_> = (0..5).map(|i| EntityNode::individual(format!("s{i}"), 0.8, 0.3)).collect();
        let g = collapse_group("squad", &squad, 0.4, Aggregation::Max).unwrap();
        assert_eq!((g.group_size, g.intentionality, g.entitativity), (5, 0.8, 0.4));

        let pats = [EntityNode::individual("a", 0.0, 0.2), EntityNode::individual("b", 0.0, 0.9)];
        let g = collapse_group("v", &pats, 0.0, Aggregation::Max).unwrap();
        assert_eq!(g.vulnerability, 0.9);
        let g = collapse_group("v", &pats, 0.0, Aggregation::Mean).unwrap();
        assert!((g.vulnerability - 0.55).abs() < 1e-12);

        let one = [EntityNode::individual("solo", 0.6, 0.4)];
        let g = collapse_group("g", &one, 0.3, Aggregation::Max).unwrap();
        assert_eq!((g.group_size, g.intentionality, g.vulnerability), (1, 0.6, 0.4));

        assert_eq!(
            collapse_group("g", &[], 0.0, Aggregation::Max),
            Err(NormalizeError::EmptyGroup)
        );
    }

    #[test]
    fn dilution_examples() {
        let a = dilute(0.8, 5, 0.0);
        assert_eq!(a.effective_size, 5.0);
        assert!((a.per_member - 0.16).abs() < 1e-12);
        assert_eq!(dilute(0.8, 5, 1.0).per_member, 0.8);
        assert_eq!(dilute(0.8, 1, 0.3).per_member, 0.8);
    }

    #[test]
    fn ceo_is_proxy_and_empty_institution_is_ungrounded() {
        let corp = EntityNode::individual("corp", 0.5, 0.5)
            .with_kind(EntityKind::Institution)
            .with_members(vec!["ceo".into(), "clerk".into()]);
        let g = DyadicGraph::new("g")
            .with_entity(EntityNode::individual("ceo", 0.9, 0.3))
            .with_entity(EntityNode::individual("clerk", 0.2, 0.5))
            .with_entity(corp.clone());
        assert_eq!(agentic_reduction(&corp, &g), Reduction::Proxy("ceo".into()));

        let shell = EntityNode::individual("shell", 0.7, 0.5).with_kind(EntityKind::Institution);
        assert_eq!(agentic_reduction(&shell, &g), Reduction::Ungrounded);
        assert_eq!(institution_vulnerability(&shell, &g, Aggregation::Max), 0.0);
    }

    #[test]
    fn proxy_ties_go_to_smaller_id() {
        let inst = EntityNode::individual("i", 0.5, 0.5)
            .with_kind(EntityKind::Institution)
            .with_members(vec!["b".into(), "a".into()]);
        let g = DyadicGraph::new("g")
            .with_entity(EntityNode::individual("a", 0.7, 0.3))
            .with_entity(EntityNode::individual("b", 0.7, 0.3));
        assert_eq!(agentic_reduction(&inst, &g), Reduction::Proxy("a".into()));
    }

    fn chain_graph(mid_a: f64) -> DyadicGraph {
        let mut e1 = HarmEdge::new("order", "x", "y");
        e1.causality = 0.9;
        let mut e2 = HarmEdge::new("shoot", "y", "z");
        e2.causality = 0.8;
        e2.suffering = 0.7;
        let mut g = DyadicGraph::new("g")
            .with_entity(EntityNode::individual("x", 0.9, 0.1))
            .with_entity(EntityNode::individual("y", mid_a, 0.5))
            .with_entity(EntityNode::individual("z", 0.1, 0.9))
            .with_edge(e1)
            .with_edge(e2);
        g.chain_order = Some(vec!["order".into(), "shoot".into()]);
        g
    }

    #[test]
    fn agentic_intermediary_keeps_two_stages() {
        let (d, out, _) = decompose_chain(&chain_graph(0.9), &profile()).unwrap();
        assert_eq!(d.dyads.len(), 2);
        assert_eq!(d.dyads.iter().map(|(_, s)| *s).collect::<Vec<_>>(), vec![1, 2]);
        assert!(d.instrument_collapses.is_empty());
        assert!(validate_graph(&out).is_empty());
    }

    #[test]
    fn instrument_intermediary_is_collapsed() {
        let (d, out, _) = decompose_chain(&chain_graph(0.1), &profile()).unwrap();
        assert_eq!(d.dyads.len(), 1);
        let (e, stage) = &d.dyads[0];
        assert_eq!(*stage, 1);
        assert_eq!(e.id, "order+shoot");
        assert_eq!((e.agent_id.as_deref(), e.patient_id.as_deref()), (Some("x"), Some("z")));
        assert!((e.causality - 0.72).abs() < 1e-12);
        assert_eq!(e.suffering, 0.7);
        assert_eq!(d.instrument_collapses[0].removed, "y");
        assert_eq!(d.instrument_collapses[0].residual_blame, 0.1);
        assert!(validate_graph(&out).is_empty());
        assert_eq!(out.edges.len(), 1);
        // Decomposing again changes nothing.
        let (d2, out2, _) = decompose_chain(&out, &profile()).unwrap();
        assert_eq!(d2.dyads.len(), 1);
        assert_eq!(snapshot(&out2), snapshot(&out));
    }

    #[test]
    fn single_edge_chain_is_one_stage() {
        let mut g = chain_graph(0.9);
        g.chain_order = Some(vec!["shoot".into()]);
        let (d, _, _) = decompose_chain(&g, &profile()).unwrap();
        assert_eq!(d.dyads.len(), 1);
        assert!(d.instrument_collapses.is_empty());
    }

    #[test]
    fn mismatched_chain_is_rejected() {
        let mut g = chain_graph(0.9);
        g.chain_order = Some(vec!["shoot".into(), "order".into()]);
        assert_eq!(
            decompose_chain(&g, &profile()).unwrap_err(),
            NormalizeError::MalformedChain("order".into())
        );
    }
}
