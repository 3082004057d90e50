//! Plain-text scenario format.
//!
//! ```text
//! # comment
//! scenario "name" { systemic: false }
//! entity ceo { intentionality: 0.7, community: north }
//! group squad { members: [s1, s2], entitativity: 1, size: 5 }
//! action ceo -> _ { id: dump, causality: 0.9, valence: -1, suffering: 0.8, exogenous: 0, category: pollution }
//! chain [order, shoot]
//! obligation help { agent: ai, patient: user, direction: promote, tag: answer, demanded_by: user, agency: low }
//! ```
//!
//! The full grammar and default table live in `docs/dsl.md`.

mod parse;
pub mod syntax;
mod write;

pub use parse::{
    parse_scenario, DEFAULT_CAUSALITY, DEFAULT_ENTITATIVITY, DEFAULT_EXOGENOUS,
    DEFAULT_INTENTIONALITY, DEFAULT_VALENCE, DEFAULT_VULNERABILITY, OPEN_ENDPOINT,
};
pub use syntax::{ParseError, ParseErrorKind};
pub use write::serialize_graph;
