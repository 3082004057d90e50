//! Domain types shared by every pass: the dyadic graph IR, judgment records
//! and trace steps.
//!
//! All perception magnitudes (intentionality, vulnerability, causality,
//! suffering) live on the unit interval; valence lives on `[-1, 1]`.
//! Values are plain data: passes never mutate a graph in place, they return
//! a new one.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// What sort of mind an entity node stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Individual,
    Group,
    Institution,
    Diffuse,
    System,
    Supernatural,
}

impl EntityKind {
    pub const ALL: [EntityKind; 6] = [
        EntityKind::Individual,
        EntityKind::Group,
        EntityKind::Institution,
        EntityKind::Diffuse,
        EntityKind::System,
        EntityKind::Supernatural,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Individual => "individual",
            EntityKind::Group => "group",
            EntityKind::Institution => "institution",
            EntityKind::Diffuse => "diffuse",
            EntityKind::System => "system",
            EntityKind::Supernatural => "supernatural",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Kinds that carry a member list.
    pub fn is_collective(self) -> bool {
        matches!(self, EntityKind::Group | EntityKind::Institution)
    }

    /// Kinds that only the completion operator (or a latent declaration) may introduce.
    pub fn is_inferred(self) -> bool {
        matches!(
            self,
            EntityKind::Diffuse | EntityKind::System | EntityKind::Supernatural
        )
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Typecasting lock. A locked entity cannot flip roles.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lock {
    #[default]
    None,
    /// Always perceives itself as the intentional agent; suppresses vulnerability.
    LockedAgent,
    /// Always perceives itself as the victim; suppresses intentionality.
    LockedPatient,
}

impl Lock {
    pub fn as_str(self) -> &'static str {
        match self {
            Lock::None => "none",
            Lock::LockedAgent => "locked_agent",
            Lock::LockedPatient => "locked_patient",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Lock::None),
            "locked_agent" => Some(Lock::LockedAgent),
            "locked_patient" => Some(Lock::LockedPatient),
            _ => None,
        }
    }
}

/// A perceived mind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityNode {
    pub id: String,
    pub kind: EntityKind,
    /// Perceived intentionality (agency), in `[0, 1]`.
    pub intentionality: f64,
    /// Perceived vulnerability (experience), in `[0, 1]`.
    pub vulnerability: f64,
    /// Head count `n >= 1`. May exceed `members.len()` when only
    /// representative members are named.
    pub group_size: u64,
    pub entitativity: f64,
    pub members: Vec<String>,
    /// Declared but not yet placed in a dyad; the completion operator may promote it.
    pub latent: bool,
    /// Created by the completion operator.
    pub synthetic: bool,
    pub lock: Lock,
    pub community: Option<String>,
    /// Free-text descriptor handed to a perception provider.
    pub descriptor: Option<String>,
}

impl EntityNode {
    pub fn individual(id: impl Into<String>, intentionality: f64, vulnerability: f64) -> Self {
        Self {
            id: id.into(),
            kind: EntityKind::Individual,
            intentionality,
            vulnerability,
            group_size: 1,
            entitativity: 0.0,
            members: Vec::new(),
            latent: false,
            synthetic: false,
            lock: Lock::None,
            community: None,
            descriptor: None,
        }
    }

    pub fn with_kind(mut self, kind: EntityKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_members(mut self, members: Vec<String>) -> Self {
        self.group_size = self.group_size.max(members.len() as u64).max(1);
        self.members = members;
        self
    }

    pub fn with_lock(mut self, lock: Lock) -> Self {
        self.lock = lock;
        self
    }

    pub fn with_community(mut self, community: impl Into<String>) -> Self {
        self.community = Some(community.into());
        self
    }

    pub fn latent(mut self) -> Self {
        self.latent = true;
        self
    }
}

/// Directed agent → patient action.
///
/// Either endpoint may be open (`None`) in raw input; the completion
/// operator closes them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmEdge {
    pub id: String,
    pub agent_id: Option<String>,
    pub patient_id: Option<String>,
    /// Perceived causality `H`, in `[0, 1]`.
    pub causality: f64,
    /// Outcome valence in `[-1, 1]`; negative means a bad outcome.
    pub valence: f64,
    /// Observed suffering `S`, in `[0, 1]`.
    pub suffering: f64,
    /// Probability that the outcome occurs under `do(A = 0)`.
    pub exogenous_sufficiency: f64,
    /// Key into the profile's `k` map.
    pub act_category: String,
}

pub const DEFAULT_CATEGORY: &str = "general";

impl HarmEdge {
    pub fn new(id: impl Into<String>, agent: &str, patient: &str) -> Self {
        Self {
            id: id.into(),
            agent_id: Some(agent.to_string()),
            patient_id: Some(patient.to_string()),
            causality: 1.0,
            valence: -1.0,
            suffering: 0.0,
            exogenous_sufficiency: 0.0,
            act_category: DEFAULT_CATEGORY.to_string(),
        }
    }

    pub fn is_closed(&self) -> bool {
        self.agent_id.is_some() && self.patient_id.is_some()
    }

    /// An observation the engine must score: it names an agent, or it
    /// records suffering that demands one.
    pub fn is_scored_observation(&self) -> bool {
        self.agent_id.is_some() || self.suffering > 0.0
    }

    pub fn is_self_directed(&self) -> bool {
        matches!((&self.agent_id, &self.patient_id), (Some(a), Some(p)) if a == p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Promote,
    Prevent,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Promote => "promote",
            Direction::Prevent => "prevent",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "promote" => Some(Direction::Promote),
            "prevent" => Some(Direction::Prevent),
            _ => None,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Direction::Promote => Direction::Prevent,
            Direction::Prevent => Direction::Promote,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgencyRequirement {
    #[default]
    None,
    Low,
    High,
}

impl AgencyRequirement {
    pub fn as_str(self) -> &'static str {
        match self {
            AgencyRequirement::None => "none",
            AgencyRequirement::Low => "low",
            AgencyRequirement::High => "high",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(AgencyRequirement::None),
            "low" => Some(AgencyRequirement::Low),
            "high" => Some(AgencyRequirement::High),
            _ => None,
        }
    }
}

/// A policy demand placed on an agent with respect to a patient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObligationEdge {
    pub id: String,
    pub policy_id: String,
    pub agent_id: String,
    pub patient_id: String,
    pub direction: Direction,
    /// Obligations sharing a tag with opposite directions cannot both hold.
    pub action_tag: String,
    pub demanded_by: Option<String>,
    pub agency_requirement: AgencyRequirement,
    /// Obligation ids declared mutually exclusive with this one.
    pub excludes: Vec<String>,
}

/// The intermediate representation every pass rewrites.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DyadicGraph {
    pub name: String,
    /// When false, the completion operator skips synthetic system agents
    /// and reaches for a supernatural one.
    pub systemic_agents: bool,
    pub entities: BTreeMap<String, EntityNode>,
    pub edges: Vec<HarmEdge>,
    pub chain_order: Option<Vec<String>>,
    pub obligations: Vec<ObligationEdge>,
    /// Names of passes already applied, each at most once.
    pub provenance: Vec<String>,
}

impl DyadicGraph {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            systemic_agents: true,
            ..Default::default()
        }
    }

    pub fn with_entity(mut self, entity: EntityNode) -> Self {
        self.insert_entity(entity);
        self
    }

    pub fn with_edge(mut self, edge: HarmEdge) -> Self {
        self.edges.push(edge);
        self
    }

    pub fn insert_entity(&mut self, entity: EntityNode) {
        self.entities.insert(entity.id.clone(), entity);
    }

    pub fn entity(&self, id: &str) -> Option<&EntityNode> {
        self.entities.get(id)
    }

    pub fn edge(&self, id: &str) -> Option<&HarmEdge> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub(crate) fn mark_applied(&mut self, pass: &str) {
        if !self.provenance.iter().any(|p| p == pass) {
            self.provenance.push(pass.to_string());
        }
    }

    /// Returns `base` if unused, otherwise the first free `base_N`.
    pub fn fresh_id(&self, base: &str) -> String {
        if !self.entities.contains_key(base) {
            return base.to_string();
        }
        (2..)
            .map(|n| format!("{base}_{n}"))
            .find(|id| !self.entities.contains_key(id))
            .expect("unbounded id space")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Range,
    ReferentialIntegrity,
    KindShape,
    ChainShape,
    DuplicateId,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::Range => "range",
            ViolationKind::ReferentialIntegrity => "referential_integrity",
            ViolationKind::KindShape => "kind_shape",
            ViolationKind::ChainShape => "chain_shape",
            ViolationKind::DuplicateId => "duplicate_id",
        }
    }
}

/// One broken invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Offending entity, edge or obligation id.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} `{}`: {}", self.kind.as_str(), self.subject, self.message)
    }
}

fn unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

/// Checks every graph invariant. An empty report means the graph is valid.
pub fn validate_graph(graph: &DyadicGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |kind, subject: &str, message: String| {
        out.push(Violation {
            kind,
            subject: subject.to_string(),
            message,
        })
    };

    for (key, e) in &graph.entities {
        if key != &e.id {
            push(
                ViolationKind::ReferentialIntegrity,
                &e.id,
                format!("indexed under `{key}`"),
            );
        }
        for (field, v) in [
            ("intentionality", e.intentionality),
            ("vulnerability", e.vulnerability),
            ("entitativity", e.entitativity),
        ] {
            if !unit(v) {
                push(ViolationKind::Range, &e.id, format!("{field} {v} outside [0, 1]"));
            }
        }
        if e.group_size < 1 {
            push(ViolationKind::Range, &e.id, "group_size must be >= 1".into());
        }
        match e.kind {
            EntityKind::Individual => {
                if e.group_size != 1 || !e.members.is_empty() {
                    push(
                        ViolationKind::KindShape,
                        &e.id,
                        "individual must have group_size 1 and no members".into(),
                    );
                }
            }
            EntityKind::Group => {
                if e.members.is_empty() {
                    push(ViolationKind::KindShape, &e.id, "group needs members".into());
                }
            }
            EntityKind::Institution => {}
            k => {
                if !e.members.is_empty() {
                    push(
                        ViolationKind::KindShape,
                        &e.id,
                        format!("{k} node cannot list members"),
                    );
                }
                if !(e.latent || e.synthetic) {
                    push(
                        ViolationKind::KindShape,
                        &e.id,
                        format!("{k} node must be latent or synthetic"),
                    );
                }
            }
        }
        if e.kind.is_collective() && (e.members.len() as u64) > e.group_size {
            push(
                ViolationKind::KindShape,
                &e.id,
                "group_size smaller than member count".into(),
            );
        }
        for m in &e.members {
            match graph.entities.get(m) {
                None => push(
                    ViolationKind::ReferentialIntegrity,
                    &e.id,
                    format!("member `{m}` is not declared"),
                ),
                Some(member) if member.kind != EntityKind::Individual => push(
                    ViolationKind::KindShape,
                    &e.id,
                    format!("member `{m}` must be an individual"),
                ),
                Some(_) => {}
            }
        }
    }

    let mut seen = std::collections::BTreeSet::new();
    for edge in &graph.edges {
        if !seen.insert(edge.id.as_str()) {
            push(ViolationKind::DuplicateId, &edge.id, "edge id repeated".into());
        }
        for (role, end) in [("agent", &edge.agent_id), ("patient", &edge.patient_id)] {
            if let Some(id) = end {
                if !graph.entities.contains_key(id) {
                    push(
                        ViolationKind::ReferentialIntegrity,
                        &edge.id,
                        format!("{role} `{id}` is not declared"),
                    );
                }
            }
        }
        for (field, v) in [
            ("causality", edge.causality),
            ("suffering", edge.suffering),
            ("exogenous", edge.exogenous_sufficiency),
        ] {
            if !unit(v) {
                push(ViolationKind::Range, &edge.id, format!("{field} {v} outside [0, 1]"));
            }
        }
        if !(-1.0..=1.0).contains(&edge.valence) {
            push(
                ViolationKind::Range,
                &edge.id,
                format!("valence {} outside [-1, 1]", edge.valence),
            );
        }
    }

    if let Some(chain) = &graph.chain_order {
        check_chain(graph, chain, &mut push);
    }

    let mut ob_ids = std::collections::BTreeSet::new();
    for ob in &graph.obligations {
        if !ob_ids.insert(ob.id.as_str()) {
            push(ViolationKind::DuplicateId, &ob.id, "obligation id repeated".into());
        }
        let refs = [
            ("agent", Some(&ob.agent_id)),
            ("patient", Some(&ob.patient_id)),
            ("demanded_by", ob.demanded_by.as_ref()),
        ];
        for (role, id) in refs {
            if let Some(id) = id {
                if !graph.entities.contains_key(id) {
                    push(
                        ViolationKind::ReferentialIntegrity,
                        &ob.id,
                        format!("{role} `{id}` is not declared"),
                    );
                }
            }
        }
    }
    for ob in &graph.obligations {
        for x in &ob.excludes {
            if !ob_ids.contains(x.as_str()) {
                push(
                    ViolationKind::ReferentialIntegrity,
                    &ob.id,
                    format!("excludes unknown obligation `{x}`"),
                );
            }
        }
    }
    out
}

fn check_chain(
    graph: &DyadicGraph,
    chain: &[String],
    push: &mut impl FnMut(ViolationKind, &str, String),
) {
    if chain.is_empty() {
        push(ViolationKind::ChainShape, "chain", "chain is empty".into());
        return;
    }
    let mut edges = Vec::with_capacity(chain.len());
    for id in chain {
        match graph.edge(id) {
            Some(e) => edges.push(e),
            None => {
                push(
                    ViolationKind::ReferentialIntegrity,
                    id,
                    "chain names an unknown edge".into(),
                );
                return;
            }
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for id in chain {
        if !seen.insert(id) {
            push(ViolationKind::ChainShape, id, "edge appears twice in chain".into());
        }
    }
    for pair in edges.windows(2) {
        let (prev, next) = (pair[0], pair[1]);
        if prev.patient_id.is_none() || prev.patient_id != next.agent_id {
            push(
                ViolationKind::ChainShape,
                &next.id,
                format!(
                    "agent does not match patient of preceding edge `{}`",
                    prev.id
                ),
            );
        }
    }
}

/// Canonical, order-independent rendering of a graph's content.
///
/// Entities are keyed by id, edges and obligations are sorted by id, and
/// every float is printed in shortest round-trip form, so two graphs have
/// equal snapshots exactly when their content is equal. Provenance is
/// bookkeeping and is left out.
pub fn snapshot(graph: &DyadicGraph) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "scenario {:?} systemic={}", graph.name, graph.systemic_agents);
    for e in graph.entities.values() {
        let _ = writeln!(
            s,
            "entity {:?} kind={} a={:?} p={:?} n={} e={:?} members={:?} latent={} synthetic={} lock={} community={:?} descriptor={:?}",
            e.id,
            e.kind,
            e.intentionality,
            e.vulnerability,
            e.group_size,
            e.entitativity,
            e.members,
            e.latent,
            e.synthetic,
            e.lock.as_str(),
            e.community,
            e.descriptor,
        );
    }
    let mut edges: Vec<&HarmEdge> = graph.edges.iter().collect();
    edges.sort_by(|a, b| a.id.cmp(&b.id));
    for e in edges {
        let _ = writeln!(
            s,
            "edge {:?} {:?}->{:?} h={:?} v={:?} s={:?} x={:?} cat={:?}",
            e.id,
            e.agent_id,
            e.patient_id,
            e.causality,
            e.valence,
            e.suffering,
            e.exogenous_sufficiency,
            e.act_category,
        );
    }
    if let Some(chain) = &graph.chain_order {
        let _ = writeln!(s, "chain {chain:?}");
    }
    let mut obs: Vec<&ObligationEdge> = graph.obligations.iter().collect();
    obs.sort_by(|a, b| a.id.cmp(&b.id));
    for o in obs {
        let mut excludes = o.excludes.clone();
        excludes.sort();
        let _ = writeln!(
            s,
            "obligation {:?} policy={:?} {:?}->{:?} dir={} tag={:?} by={:?} agency={} excludes={:?}",
            o.id,
            o.policy_id,
            o.agent_id,
            o.patient_id,
            o.direction.as_str(),
            o.action_tag,
            o.demanded_by,
            o.agency_requirement.as_str(),
            excludes,
        );
    }
    s
}

/// Ordered field/value pairs captured before or after a pass touched a target.
pub type ValueSnapshot = BTreeMap<String, String>;

/// Fixed-precision rendering used in traces and exports.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.9}")
}

/// One recorded rewrite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub pass: String,
    /// Entity, edge or obligation id.
    pub target: String,
    pub before: ValueSnapshot,
    pub after: ValueSnapshot,
    pub note: String,
}

impl TraceStep {
    pub fn new(pass: &str, target: &str, note: impl Into<String>) -> Self {
        Self {
            pass: pass.to_string(),
            target: target.to_string(),
            before: ValueSnapshot::new(),
            after: ValueSnapshot::new(),
            note: note.into(),
        }
    }

    pub fn before(mut self, key: &str, value: impl Into<String>) -> Self {
        self.before.insert(key.to_string(), value.into());
        self
    }

    pub fn after(mut self, key: &str, value: impl Into<String>) -> Self {
        self.after.insert(key.to_string(), value.into());
        self
    }

    pub fn change(self, key: &str, before: f64, after: f64) -> Self {
        self.before(key, fmt_num(before)).after(key, fmt_num(after))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Wrong,
    Tragedy,
    Neutral,
    Complex,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Wrong => "wrong",
            Classification::Tragedy => "tragedy",
            Classification::Neutral => "neutral",
            Classification::Complex => "complex",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Agent,
    Patient,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Agent => "agent",
            Role::Patient => "patient",
        }
    }
}

/// Fractional share carried by each member of a collapsed group endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberAttribution {
    pub group_id: String,
    pub role: Role,
    pub group_size: u64,
    pub effective_size: f64,
    /// Group value divided by the effective size.
    pub per_member: f64,
    /// Wrongness of the dyad with the per-member value substituted.
    pub per_member_wrongness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadRecord {
    pub edge_id: String,
    pub agent_id: String,
    pub patient_id: String,
    /// 1-based position in a declared causal chain.
    pub stage: Option<u32>,
    pub a_final: f64,
    pub p_final: f64,
    pub h: f64,
    pub s: f64,
    pub wrongness: f64,
    pub classification: Classification,
    pub attributions: Vec<MemberAttribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Judgment {
    pub scenario: String,
    pub profile: String,
    pub dyad_records: Vec<DyadRecord>,
    pub total_wrongness: f64,
    pub trace: Vec<TraceStep>,
}
