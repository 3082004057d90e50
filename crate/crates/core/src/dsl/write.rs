use std::fmt::Write;

use super::parse::OPEN_ENDPOINT;
use super::syntax::{write_number, write_string};
use crate::model::{AgencyRequirement, DyadicGraph, EntityKind, Lock};

/// Renders a graph back into scenario text.
///
/// Every field is written explicitly, so re-parsing does not depend on
/// defaults. Numbers are written at literal precision (six fractional
/// digits); graphs whose values already fit that precision round-trip
/// exactly.
pub fn serialize_graph(graph: &DyadicGraph) -> String {
    let mut out = String::new();
    let _ = write!(out, "scenario {}", write_string(&graph.name));
    if !graph.systemic_agents {
        out.push_str(" { systemic: false }");
    }
    out.push('\n');

    for e in graph.entities.values() {
        let mut fields: Vec<String> = Vec::new();
        let keyword = if e.kind == EntityKind::Group {
            "group"
        } else {
            fields.push(format!("kind: {}", e.kind));
            "entity"
        };
        fields.push(format!("intentionality: {}", write_number(e.intentionality)));
        fields.push(format!("vulnerability: {}", write_number(e.vulnerability)));
        if e.kind.is_collective() {
            fields.push(format!("members: [{}]", e.members.join(", ")));
            fields.push(format!("size: {}", e.group_size));
        }
        fields.push(format!("entitativity: {}", write_number(e.entitativity)));
        if e.latent {
            fields.push("latent: true".into());
        }
        if e.synthetic {
            fields.push("synthetic: true".into());
        }
        if e.lock != Lock::None {
            fields.push(format!("lock: {}", e.lock.as_str()));
        }
        if let Some(c) = &e.community {
            fields.push(format!("community: {}", write_string(c)));
        }
        if let Some(d) = &e.descriptor {
            fields.push(format!("descriptor: {}", write_string(d)));
        }
        let _ = writeln!(out, "{keyword} {} {{ {} }}", e.id, fields.join(", "));
    }

    for edge in &graph.edges {
        let end = |id: &Option<String>| id.clone().unwrap_or_else(|| OPEN_ENDPOINT.to_string());
        let _ = writeln!(
            out,
            "action {} -> {} {{ id: {}, causality: {}, valence: {}, suffering: {}, exogenous: {}, category: {} }}",
            end(&edge.agent_id),
            end(&edge.patient_id),
            edge.id,
            write_number(edge.causality),
            write_number(edge.valence),
            write_number(edge.suffering),
            write_number(edge.exogenous_sufficiency),
            write_string(&edge.act_category),
        );
    }

    if let Some(chain) = &graph.chain_order {
        let _ = writeln!(out, "chain [{}]", chain.join(", "));
    }

    for ob in &graph.obligations {
        let mut fields = vec![
            format!("policy: {}", write_string(&ob.policy_id)),
            format!("agent: {}", ob.agent_id),
            format!("patient: {}", ob.patient_id),
            format!("direction: {}", ob.direction.as_str()),
            format!("tag: {}", write_string(&ob.action_tag)),
        ];
        if let Some(by) = &ob.demanded_by {
            fields.push(format!("demanded_by: {by}"));
        }
        if ob.agency_requirement != AgencyRequirement::None {
            fields.push(format!("agency: {}", ob.agency_requirement.as_str()));
        }
        if !ob.excludes.is_empty() {
            fields.push(format!("excludes: [{}]", ob.excludes.join(", ")));
        }
        let _ = writeln!(out, "obligation {} {{ {} }}", ob.id, fields.join(", "));
    }
    out
}
