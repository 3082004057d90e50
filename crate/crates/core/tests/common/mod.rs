//! Random scenario and profile generators shared by integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use dyadic_core::model::{Lock, ObligationEdge};
use dyadic_core::profile::{Aggregation, InferenceMode};
use dyadic_core::{validate_graph, CultureProfile, DyadicGraph, EntityKind, EntityNode, HarmEdge};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const COMMUNITIES: [&str; 2] = ["north", "south"];
pub const CATEGORIES: [&str; 2] = ["general", "taboo"];

/// Uniform draw in `[0, 1]` with extra weight on the endpoints.
pub fn unit(rng: &mut TestRng) -> f64 {
    match rng.gen_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.gen(),
    }
}

pub fn community(rng: &mut TestRng) -> Option<String> {
    match rng.gen_range(0..3) {
        0 => None,
        i => Some(COMMUNITIES[i - 1].to_string()),
    }
}

pub fn lock(rng: &mut TestRng) -> Lock {
    match rng.gen_range(0..6) {
        0 => Lock::LockedAgent,
        1 => Lock::LockedPatient,
        _ => Lock::None,
    }
}

pub fn profile(rng: &mut TestRng) -> CultureProfile {
    let mut grid: Vec<f64> = (0..rng.gen_range(1..8)).map(|_| unit(rng)).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut k_map = BTreeMap::new();
    if rng.gen_bool(0.5) {
        k_map.insert("taboo".to_string(), rng.gen_range(0.5..4.0));
    }
    let p = CultureProfile {
        name: "sampled".into(),
        k_map,
        alpha: rng.gen_range(0.2..3.0),
        sigma_t: if rng.gen_bool(0.3) { 0.0 } else { unit(rng) },
        delta_p_ingroup: unit(rng) * 0.5,
        delta_a_outgroup: unit(rng) * 0.5,
        knobe_gain: unit(rng),
        default_diffuse_p: unit(rng),
        default_system_a: unit(rng),
        tool_threshold: unit(rng),
        tie_epsilon: rng.gen_range(0.01..0.2),
        tragedy_threshold: unit(rng),
        observer_community: community(rng),
        inference_mode: if rng.gen_bool(0.5) {
            InferenceMode::Heuristic
        } else {
            InferenceMode::Bayesian
        },
        bayes_background: rng.gen_range(0.0..0.5),
        bayes_grid: grid,
        bayes_prior_spread: unit(rng),
        group_aggregation: if rng.gen_bool(0.7) {
            Aggregation::Max
        } else {
            Aggregation::Mean
        },
    };
    assert!(p.is_valid(), "{:?}", p.violations());
    p
}

pub fn edge(rng: &mut TestRng, id: &str, agent: Option<&str>, patient: Option<&str>) -> HarmEdge {
    let mut e = HarmEdge::new(id, "", "");
    e.agent_id = agent.map(str::to_string);
    e.patient_id = patient.map(str::to_string);
    e.causality = unit(rng);
    e.valence = match rng.gen_range(0..4) {
        0 => -1.0,
        1 => 1.0,
        _ => rng.gen_range(-1.0..=1.0),
    };
    e.suffering = if rng.gen_bool(0.3) { 0.0 } else { unit(rng) };
    e.exogenous_sufficiency = if rng.gen_bool(0.5) { 0.0 } else { unit(rng) };
    e.act_category = CATEGORIES.choose(rng).unwrap().to_string();
    e
}

/// Small valid graph: at most three entities (individuals, a group or an
/// institution), at most two edges, sometimes a chain.
pub fn small_graph(rng: &mut TestRng) -> DyadicGraph {
    loop {
        let g = small_graph_attempt(rng);
        if validate_graph(&g).is_empty() {
            return g;
        }
    }
}

fn small_graph_attempt(rng: &mut TestRng) -> DyadicGraph {
    let ids = ["a", "b", "c"];
    let n = rng.gen_range(1..=3);
    let mut g = DyadicGraph::new("random");
    g.systemic_agents = rng.gen_bool(0.7);
    for id in &ids[..n] {
        let mut e = EntityNode::individual(*id, unit(rng), unit(rng));
        e.community = community(rng);
        e.lock = lock(rng);
        e.latent = rng.gen_bool(0.15);
        g.insert_entity(e);
    }
    // Turn the last entity into a collective over the others.
    if n >= 2 && rng.gen_bool(0.4) {
        let last = ids[n - 1];
        let members: Vec<String> = ids[..n - 1]
            .iter()
            .filter(|_| rng.gen_bool(0.7))
            .map(|s| s.to_string())
            .collect();
        let kind = if rng.gen_bool(0.5) {
            EntityKind::Group
        } else {
            EntityKind::Institution
        };
        let node = g.entities.get_mut(last).unwrap();
        node.kind = kind;
        node.group_size = members.len().max(1) as u64 + rng.gen_range(0..20);
        node.members = members;
        node.entitativity = unit(rng);
    } else if rng.gen_bool(0.15) {
        // A memberless institution.
        let id = ids[rng.gen_range(0..n)];
        g.entities.get_mut(id).unwrap().kind = EntityKind::Institution;
    }
    let pick = |rng: &mut TestRng| -> Option<&'static str> {
        if rng.gen_bool(0.15) {
            None
        } else {
            Some(ids[rng.gen_range(0..n)])
        }
    };
    let m = rng.gen_range(0..=2);
    for i in 0..m {
        let (a, p) = (pick(rng), pick(rng));
        let e = edge(rng, &format!("e{}", i + 1), a, p);
        g.edges.push(e);
    }
    if m == 2 && rng.gen_bool(0.4) {
        let mid = ids[rng.gen_range(0..n)];
        g.edges[0].patient_id = Some(mid.to_string());
        g.edges[1].agent_id = Some(mid.to_string());
        g.chain_order = Some(vec!["e1".into(), "e2".into()]);
    } else if m >= 1 && rng.gen_bool(0.1) {
        g.chain_order = Some(vec!["e1".into()]);
    }
    g
}

/// Larger graph for structural properties: up to `max_entities`
/// individuals, some latent, edges with open endpoints.
pub fn partial_graph(rng: &mut TestRng, max_entities: usize, max_edges: usize) -> DyadicGraph {
    let n = rng.gen_range(1..=max_entities);
    let mut g = DyadicGraph::new("partial");
    g.systemic_agents = rng.gen_bool(0.7);
    let ids: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    for id in &ids {
        let mut e = EntityNode::individual(id, unit(rng), unit(rng));
        e.latent = rng.gen_bool(0.2);
        e.community = community(rng);
        g.insert_entity(e);
    }
    for i in 0..rng.gen_range(0..=max_edges) {
        let a = (!rng.gen_bool(0.3)).then(|| ids[rng.gen_range(0..n)].as_str());
        let p = (!rng.gen_bool(0.3)).then(|| ids[rng.gen_range(0..n)].as_str());
        g.edges.push(edge(rng, &format!("e{i}"), a, p));
    }
    debug_assert!(validate_graph(&g).is_empty());
    g
}

pub fn obligation(
    id: &str,
    agent: &str,
    patient: &str,
    direction: dyadic_core::model::Direction,
    tag: &str,
    demanded_by: Option<&str>,
    agency: dyadic_core::model::AgencyRequirement,
) -> ObligationEdge {
    ObligationEdge {
        id: id.into(),
        policy_id: id.into(),
        agent_id: agent.into(),
        patient_id: patient.into(),
        direction,
        action_tag: tag.into(),
        demanded_by: demanded_by.map(str::to_string),
        agency_requirement: agency,
        excludes: Vec::new(),
    }
}
