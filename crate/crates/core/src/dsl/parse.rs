use std::collections::{BTreeMap, BTreeSet};

use super::syntax::{lex, Cursor, Entry, ParseError, ParseErrorKind, Pos, Tok};
use crate::model::{
    validate_graph, AgencyRequirement, Direction, DyadicGraph, EntityKind, EntityNode, HarmEdge,
    Lock, ObligationEdge, DEFAULT_CATEGORY,
};

pub const DEFAULT_INTENTIONALITY: f64 = 0.5;
pub const DEFAULT_VULNERABILITY: f64 = 0.5;
pub const DEFAULT_CAUSALITY: f64 = 1.0;
pub const DEFAULT_VALENCE: f64 = -1.0;
pub const DEFAULT_EXOGENOUS: f64 = 0.0;
pub const DEFAULT_ENTITATIVITY: f64 = 0.0;

/// Endpoint marker for an unknown agent or patient.
pub const OPEN_ENDPOINT: &str = "_";

const ITEMS: [&str; 6] = ["scenario", "entity", "group", "action", "chain", "obligation"];

fn is_item(tok: &Tok) -> bool {
    matches!(tok, Tok::Ident(s) if ITEMS.contains(&s.as_str()))
}

fn round_literal(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Source positions of declarations, used to place post-build diagnostics.
#[derive(Default)]
struct Positions {
    entities: BTreeMap<String, Pos>,
    edges: BTreeMap<String, Pos>,
    obligations: BTreeMap<String, Pos>,
    chain: Option<Pos>,
}

struct PendingEdge {
    pos: Pos,
    agent: Option<(String, Pos)>,
    patient: Option<(String, Pos)>,
    edge: HarmEdge,
    suffering_given: bool,
}

struct Builder {
    graph: DyadicGraph,
    pos: Positions,
    scenario_seen: bool,
    edges: Vec<PendingEdge>,
    obligation_refs: Vec<(usize, Vec<(String, Pos)>, Vec<(String, Pos)>)>,
    member_refs: Vec<(String, Vec<(String, Pos)>)>,
    chain: Option<Vec<(String, Pos)>>,
    errors: Vec<ParseError>,
}

/// Parses scenario text into a graph.
///
/// Parsing is total: any input yields either a graph that passes
/// [`validate_graph`] or a nonempty list of positioned errors.
pub fn parse_scenario(source: &str) -> Result<DyadicGraph, Vec<ParseError>> {
    let tokens = lex(source)?;
    let mut b = Builder {
        graph: DyadicGraph::new(""),
        pos: Positions::default(),
        scenario_seen: false,
        edges: Vec::new(),
        obligation_refs: Vec::new(),
        member_refs: Vec::new(),
        chain: None,
        errors: Vec::new(),
    };
    let mut cur = Cursor::new(&tokens);
    while !cur.is_done() {
        let start = cur.offset();
        if let Err(e) = b.item(&mut cur) {
            b.errors.push(e);
            cur.recover(start, is_item);
        }
    }
    if !b.scenario_seen {
        b.errors
            .insert(0, Pos::START.error(ParseErrorKind::Syntax, "no scenario declared"));
    }
    b.resolve();
    if b.errors.is_empty() {
        b.check_invariants();
    }
    if b.errors.is_empty() {
        Ok(b.graph)
    } else {
        b.errors.sort_by_key(|e| (e.line, e.column));
        Err(b.errors)
    }
}

impl Builder {
    fn item(&mut self, cur: &mut Cursor<'_>) -> Result<(), ParseError> {
        let (keyword, pos) = cur.ident("an item keyword")?;
        match keyword.as_str() {
            "scenario" => self.scenario(cur, pos),
            "entity" => self.entity(cur, false),
            "group" => self.entity(cur, true),
            "action" => self.action(cur, pos),
            "chain" => self.chain(cur, pos),
            "obligation" => self.obligation(cur),
            other => Err(pos.error(
                ParseErrorKind::Syntax,
                format!("unknown item `{other}`; expected one of {}", ITEMS.join(", ")),
            )),
        }
    }

    fn scenario(&mut self, cur: &mut Cursor<'_>, pos: Pos) -> Result<(), ParseError> {
        if self.scenario_seen {
            return Err(pos.error(ParseErrorKind::Syntax, "scenario declared twice"));
        }
        let (name, _) = cur.string("a quoted scenario name")?;
        self.scenario_seen = true;
        self.graph.name = name;
        if cur.at_block() {
            for entry in cur.block()? {
                match entry.key.as_str() {
                    "systemic" => self.graph.systemic_agents = entry.boolean()?,
                    _ => self.errors.push(entry.unknown("scenario")),
                }
            }
        }
        Ok(())
    }

    fn entity(&mut self, cur: &mut Cursor<'_>, group: bool) -> Result<(), ParseError> {
        let (id, pos) = cur.ident("an entity id")?;
        if id == OPEN_ENDPOINT {
            return Err(pos.error(ParseErrorKind::Syntax, "`_` is reserved for open endpoints"));
        }
        let entries = if group || cur.at_block() {
            cur.block()?
        } else {
            Vec::new()
        };
        let mut node = EntityNode::individual(id.clone(), DEFAULT_INTENTIONALITY, DEFAULT_VULNERABILITY);
        node.entitativity = DEFAULT_ENTITATIVITY;
        if group {
            node.kind = EntityKind::Group;
        }
        let mut size: Option<u64> = None;
        let mut members = Vec::new();
        for entry in &entries {
            let r = self.entity_key(&mut node, entry, group, &mut size, &mut members);
            if let Err(e) = r {
                self.errors.push(e);
            }
        }
        node.members = members.iter().map(|(m, _)| m.clone()).collect();
        node.group_size = if node.kind.is_collective() {
            size.unwrap_or(node.members.len() as u64).max(1)
        } else {
            size.unwrap_or(1)
        };
        if self.graph.entities.contains_key(&id) {
            self.errors.push(pos.error(
                ParseErrorKind::DuplicateId,
                format!("entity `{id}` declared twice"),
            ));
            return Ok(());
        }
        self.member_refs.push((id.clone(), members));
        self.pos.entities.insert(id, pos);
        self.graph.insert_entity(node);
        Ok(())
    }

    fn entity_key(
        &mut self,
        node: &mut EntityNode,
        entry: &Entry,
        group: bool,
        size: &mut Option<u64>,
        members: &mut Vec<(String, Pos)>,
    ) -> Result<(), ParseError> {
        match entry.key.as_str() {
            "kind" if !group => {
                let raw = entry.ident()?;
                node.kind = EntityKind::parse(raw).ok_or_else(|| {
                    entry
                        .value_pos
                        .error(ParseErrorKind::Syntax, format!("unknown kind `{raw}`"))
                })?;
            }
            "intentionality" => node.intentionality = entry.unit()?,
            "vulnerability" => node.vulnerability = entry.unit()?,
            "entitativity" => node.entitativity = entry.unit()?,
            "size" => {
                let n = entry.num()?;
                if n < 1.0 || n.fract() != 0.0 || n > u32::MAX as f64 {
                    return Err(entry.value_pos.error(
                        ParseErrorKind::Range,
                        format!("`size` must be a positive integer, got {n}"),
                    ));
                }
                *size = Some(n as u64);
            }
            "members" => *members = entry.ident_list()?,
            "latent" => node.latent = entry.boolean()?,
            "synthetic" => node.synthetic = entry.boolean()?,
            "lock" => {
                let raw = entry.ident()?;
                node.lock = Lock::parse(raw).ok_or_else(|| {
                    entry
                        .value_pos
                        .error(ParseErrorKind::Syntax, format!("unknown lock `{raw}`"))
                })?;
            }
            "community" => node.community = Some(entry.text()?.to_string()),
            "descriptor" => node.descriptor = Some(entry.text()?.to_string()),
            _ => return Err(entry.unknown(if group { "group" } else { "entity" })),
        }
        Ok(())
    }

    fn endpoint(cur: &mut Cursor<'_>, want: &str) -> Result<Option<(String, Pos)>, ParseError> {
        let (id, pos) = cur.ident(want)?;
        Ok((id != OPEN_ENDPOINT).then_some((id, pos)))
    }

    fn action(&mut self, cur: &mut Cursor<'_>, pos: Pos) -> Result<(), ParseError> {
        let agent = Self::endpoint(cur, "an agent id or `_`")?;
        cur.expect(&Tok::Arrow, "`->`")?;
        let patient = Self::endpoint(cur, "a patient id or `_`")?;
        let entries = if cur.at_block() { cur.block()? } else { Vec::new() };
        let mut edge = HarmEdge {
            id: format!("e{}", self.edges.len() + 1),
            agent_id: agent.as_ref().map(|(a, _)| a.clone()),
            patient_id: patient.as_ref().map(|(p, _)| p.clone()),
            causality: DEFAULT_CAUSALITY,
            valence: DEFAULT_VALENCE,
            suffering: 0.0,
            exogenous_sufficiency: DEFAULT_EXOGENOUS,
            act_category: DEFAULT_CATEGORY.to_string(),
        };
        let mut suffering_given = false;
        for entry in &entries {
            let r: Result<(), ParseError> = (|| {
                match entry.key.as_str() {
                    "id" => edge.id = entry.ident()?.to_string(),
                    "causality" => edge.causality = entry.unit()?,
                    "valence" => edge.valence = entry.num_in(-1.0, 1.0)?,
                    "suffering" => {
                        edge.suffering = entry.unit()?;
                        suffering_given = true;
                    }
                    "exogenous" => edge.exogenous_sufficiency = entry.unit()?,
                    "category" => edge.act_category = entry.text()?.to_string(),
                    _ => return Err(entry.unknown("action")),
                }
                Ok(())
            })();
            if let Err(e) = r {
                self.errors.push(e);
            }
        }
        self.edges.push(PendingEdge {
            pos,
            agent,
            patient,
            edge,
            suffering_given,
        });
        Ok(())
    }

    fn chain(&mut self, cur: &mut Cursor<'_>, pos: Pos) -> Result<(), ParseError> {
        if self.chain.is_some() {
            return Err(pos.error(ParseErrorKind::Syntax, "chain declared twice"));
        }
        let (value, vpos) = cur.value()?;
        let entry = Entry {
            key: "chain".into(),
            key_pos: pos,
            value,
            value_pos: vpos,
        };
        let ids = entry.ident_list()?;
        if ids.is_empty() {
            return Err(vpos.error(ParseErrorKind::Syntax, "chain lists no edges"));
        }
        self.pos.chain = Some(pos);
        self.chain = Some(ids);
        Ok(())
    }

    fn obligation(&mut self, cur: &mut Cursor<'_>) -> Result<(), ParseError> {
        let (id, pos) = cur.ident("an obligation id")?;
        let entries = cur.block()?;
        let mut agent = None;
        let mut patient = None;
        let mut direction = None;
        let mut ob = ObligationEdge {
            id: id.clone(),
            policy_id: id.clone(),
            agent_id: String::new(),
            patient_id: String::new(),
            direction: Direction::Promote,
            action_tag: id.clone(),
            demanded_by: None,
            agency_requirement: AgencyRequirement::None,
            excludes: Vec::new(),
        };
        let mut refs = Vec::new();
        let mut excludes = Vec::new();
        for entry in &entries {
            let r: Result<(), ParseError> = (|| {
                match entry.key.as_str() {
                    "policy" => ob.policy_id = entry.text()?.to_string(),
                    "agent" => agent = Some((entry.ident()?.to_string(), entry.value_pos)),
                    "patient" => patient = Some((entry.ident()?.to_string(), entry.value_pos)),
                    "direction" => {
                        let raw = entry.ident()?;
                        direction = Some(Direction::parse(raw).ok_or_else(|| {
                            entry.value_pos.error(
                                ParseErrorKind::Syntax,
                                format!("direction must be promote or prevent, got `{raw}`"),
                            )
                        })?);
                    }
                    "tag" => ob.action_tag = entry.text()?.to_string(),
                    "demanded_by" => {
                        let by = entry.ident()?.to_string();
                        refs.push((by.clone(), entry.value_pos));
                        ob.demanded_by = Some(by);
                    }
                    "agency" => {
                        let raw = entry.ident()?;
                        ob.agency_requirement = AgencyRequirement::parse(raw).ok_or_else(|| {
                            entry.value_pos.error(
                                ParseErrorKind::Syntax,
                                format!("agency must be none, low or high, got `{raw}`"),
                            )
                        })?;
                    }
                    "excludes" => excludes = entry.ident_list()?,
                    _ => return Err(entry.unknown("obligation")),
                }
                Ok(())
            })();
            if let Err(e) = r {
                self.errors.push(e);
            }
        }
        let missing = |what: &str| pos.error(ParseErrorKind::Syntax, format!("obligation `{id}` needs `{what}`"));
        let (Some((a, apos)), Some((p, ppos)), Some(dir)) = (agent, patient, direction) else {
            return Err(missing("agent, patient and direction"));
        };
        ob.agent_id = a.clone();
        ob.patient_id = p.clone();
        ob.direction = dir;
        ob.excludes = excludes.iter().map(|(x, _)| x.clone()).collect();
        refs.push((a, apos));
        refs.push((p, ppos));
        if self.pos.obligations.contains_key(&id) {
            self.errors.push(pos.error(
                ParseErrorKind::DuplicateId,
                format!("obligation `{id}` declared twice"),
            ));
            return Ok(());
        }
        self.pos.obligations.insert(id, pos);
        self.obligation_refs
            .push((self.graph.obligations.len(), refs, excludes));
        self.graph.obligations.push(ob);
        Ok(())
    }

    fn dangling(&mut self, id: &str, pos: Pos, what: &str) {
        self.errors.push(pos.error(
            ParseErrorKind::DanglingReference,
            format!("{what} `{id}` is not a declared entity"),
        ));
    }

    /// Second pass: references, defaults that read other declarations, chain.
    fn resolve(&mut self) {
        let member_refs = std::mem::take(&mut self.member_refs);
        for (_, members) in &member_refs {
            for (m, pos) in members {
                if !self.graph.entities.contains_key(m) {
                    self.dangling(m, *pos, "member");
                }
            }
        }

        let pending = std::mem::take(&mut self.edges);
        let mut seen = BTreeSet::new();
        for mut p in pending {
            let mut ok = true;
            for (end, what) in [(&p.agent, "agent"), (&p.patient, "patient")] {
                if let Some((id, _)) = end {
                    if !self.graph.entities.contains_key(id) {
                        // Reported at the action line.
                        self.errors.push(p.pos.error(
                            ParseErrorKind::DanglingReference,
                            format!("{what} `{id}` is not a declared entity"),
                        ));
                        ok = false;
                    }
                }
            }
            if !seen.insert(p.edge.id.clone()) {
                self.errors.push(p.pos.error(
                    ParseErrorKind::DuplicateId,
                    format!("action id `{}` used twice", p.edge.id),
                ));
            }
            if ok && !p.suffering_given {
                p.edge.suffering = match &p.edge.patient_id {
                    Some(pid) => round_literal(
                        p.edge.causality * self.graph.entities[pid].vulnerability,
                    ),
                    None => 0.0,
                };
            }
            self.pos.edges.insert(p.edge.id.clone(), p.pos);
            self.graph.edges.push(p.edge);
        }

        let ob_refs = std::mem::take(&mut self.obligation_refs);
        for (_, refs, excludes) in &ob_refs {
            for (id, pos) in refs {
                if !self.graph.entities.contains_key(id) {
                    self.dangling(id, *pos, "reference");
                }
            }
            for (x, pos) in excludes {
                if !self.pos.obligations.contains_key(x) {
                    self.errors.push(pos.error(
                        ParseErrorKind::DanglingReference,
                        format!("excluded obligation `{x}` is not declared"),
                    ));
                }
            }
        }

        if let Some(chain) = self.chain.take() {
            for (id, pos) in &chain {
                if self.graph.edge(id).is_none() {
                    self.errors.push(pos.error(
                        ParseErrorKind::DanglingReference,
                        format!("chain names unknown action `{id}`"),
                    ));
                }
            }
            self.graph.chain_order = Some(chain.into_iter().map(|(id, _)| id).collect());
        }
    }

    /// Maps any remaining invariant violation onto its declaration.
    fn check_invariants(&mut self) {
        for v in validate_graph(&self.graph) {
            let chain_pos = (v.kind == crate::model::ViolationKind::ChainShape)
                .then_some(self.pos.chain)
                .flatten();
            let pos = chain_pos
                .or_else(|| self.pos.entities.get(&v.subject).copied())
                .or_else(|| self.pos.edges.get(&v.subject).copied())
                .or_else(|| self.pos.obligations.get(&v.subject).copied())
                .or(self.pos.chain)
                .unwrap_or(Pos::START);
            let kind = match v.kind {
                crate::model::ViolationKind::ReferentialIntegrity => ParseErrorKind::DanglingReference,
                crate::model::ViolationKind::DuplicateId => ParseErrorKind::DuplicateId,
                crate::model::ViolationKind::ChainShape => ParseErrorKind::Syntax,
                _ => ParseErrorKind::Range,
            };
            self.errors.push(pos.error(kind, v.to_string()));
        }
    }
}
