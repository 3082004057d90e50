//! Mind-perception port.
//!
//! A provider maps an entity descriptor (and optional persona or community
//! context) to an `(intentionality, vulnerability)` point. The bundled
//! [`FixtureProvider`] is a fixed lookup table; [`HttpProvider`] forwards
//! the same question to a remote service.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DyadicGraph, TraceStep};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perception {
    pub intentionality: f64,
    pub vulnerability: f64,
}

impl Perception {
    pub const NEUTRAL: Perception = Perception {
        intentionality: 0.5,
        vulnerability: 0.5,
    };

    pub const fn new(intentionality: f64, vulnerability: f64) -> Self {
        Self {
            intentionality,
            vulnerability,
        }
    }

    fn in_range(&self) -> bool {
        (0.0..=1.0).contains(&self.intentionality) && (0.0..=1.0).contains(&self.vulnerability)
    }
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("empty entity descriptor")]
    EmptyDescriptor,
    #[error("perception request failed: {0}")]
    Transport(String),
    #[error("perception service answered HTTP {0}")]
    Status(u16),
    #[error("malformed perception response: {0}")]
    Malformed(String),
}

pub trait PerceptionProvider: Send + Sync {
    fn perceive(&self, descriptor: &str, context: Option<&str>) -> Result<Perception, ProviderError>;
}

/// `(descriptor, context, intentionality, vulnerability)`.
const FIXTURE_TABLE: &[(&str, Option<&str>, f64, f64)] = &[
    ("rock", None, 0.0, 0.0),
    ("rock", Some("animist"), 0.3, 0.4),
    ("adult human", None, 0.8, 0.7),
    ("child", None, 0.3, 0.95),
    ("infant", None, 0.05, 1.0),
    ("dog", None, 0.3, 0.8),
    ("robot", None, 0.6, 0.05),
    ("ai system", None, 0.7, 0.05),
    ("ai system", Some("ai welfare advocate"), 0.7, 0.3),
    ("corporation", None, 0.7, 0.0),
    ("government", None, 0.6, 0.0),
    ("environment", None, 0.0, 0.6),
    ("environment", Some("animist"), 0.5, 0.9),
    ("river", None, 0.0, 0.4),
    ("river", Some("animist"), 0.4, 0.8),
    ("society", None, 0.2, 0.5),
    ("god", None, 1.0, 0.0),
    ("fate", None, 0.4, 0.0),
    ("ceo", None, 0.9, 0.3),
    ("clerk", None, 0.4, 0.5),
    ("soldier", None, 0.6, 0.6),
    ("prisoner", None, 0.3, 0.9),
];

/// Deterministic fixture provider backed by a bundled table.
///
/// Lookup tries `(descriptor, context)` first, then `(descriptor, none)`;
/// unknown descriptors get the neutral point `(0.5, 0.5)`. Descriptors are
/// compared case-insensitively with surrounding whitespace trimmed.
#[derive(Debug, Clone, Copy, Default)]
pub struct FixtureProvider;

impl FixtureProvider {
    pub fn lookup(descriptor: &str, context: Option<&str>) -> Perception {
        let key = descriptor.trim().to_ascii_lowercase();
        let ctx = context.map(|c| c.trim().to_ascii_lowercase());
        let find = |want: Option<&str>| {
            FIXTURE_TABLE
                .iter()
                .find(|(d, c, _, _)| *d == key && *c == want)
                .map(|&(_, _, a, p)| Perception::new(a, p))
        };
        ctx.as_deref()
            .and_then(|c| find(Some(c)))
            .or_else(|| find(None))
            .unwrap_or(Perception::NEUTRAL)
    }
}

impl PerceptionProvider for FixtureProvider {
    fn perceive(&self, descriptor: &str, context: Option<&str>) -> Result<Perception, ProviderError> {
        if descriptor.trim().is_empty() {
            return Err(ProviderError::EmptyDescriptor);
        }
        Ok(Self::lookup(descriptor, context))
    }
}

/// Fixture lookup as a free function.
pub fn fixture_perceive(descriptor: &str, context: Option<&str>) -> (f64, f64) {
    let p = FixtureProvider::lookup(descriptor, context);
    (p.intentionality, p.vulnerability)
}

#[derive(Debug, Serialize)]
struct PerceptionRequest<'a> {
    description: &'a str,
    context: Option<&'a str>,
}

/// Remote provider: `POST {endpoint}` with a JSON body
/// `{"description": ..., "context": ...}`, expecting
/// `{"intentionality": ..., "vulnerability": ...}`.
#[derive(Debug)]
pub struct HttpProvider {
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        Self {
            endpoint: endpoint.into(),
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }
}

impl PerceptionProvider for HttpProvider {
    fn perceive(&self, descriptor: &str, context: Option<&str>) -> Result<Perception, ProviderError> {
        if descriptor.trim().is_empty() {
            return Err(ProviderError::EmptyDescriptor);
        }
        let body = PerceptionRequest {
            description: descriptor,
            context,
        };
        let response = match self.agent.post(&self.endpoint).send_json(&body) {
            Ok(r) => r,
            Err(ureq::Error::Status(code, _)) => return Err(ProviderError::Status(code)),
            Err(e) => return Err(ProviderError::Transport(e.to_string())),
        };
        let p: Perception = response
            .into_json()
            .map_err(|e| ProviderError::Malformed(e.to_string()))?;
        if !p.in_range() {
            return Err(ProviderError::Malformed(format!(
                "values ({}, {}) outside [0, 1]",
                p.intentionality, p.vulnerability
            )));
        }
        Ok(p)
    }
}

pub const PERCEPTION: &str = "perception";

/// Overwrites `intentionality` and `vulnerability` of every entity that
/// carries a descriptor with the provider's answer.
pub fn perceive_entities(
    graph: &DyadicGraph,
    provider: &dyn PerceptionProvider,
    context: Option<&str>,
) -> Result<(DyadicGraph, Vec<TraceStep>), ProviderError> {
    let mut out = graph.clone();
    let mut trace = Vec::new();
    for e in out.entities.values_mut() {
        let Some(descriptor) = e.descriptor.clone() else {
            continue;
        };
        let p = provider.perceive(&descriptor, context)?;
        trace.push(
            TraceStep::new(PERCEPTION, &e.id, format!("perceived as {descriptor:?}"))
                .change("intentionality", e.intentionality, p.intentionality)
                .change("vulnerability", e.vulnerability, p.vulnerability),
        );
        e.intentionality = p.intentionality;
        e.vulnerability = p.vulnerability;
    }
    out.mark_applied(PERCEPTION);
    Ok((out, trace))
}
