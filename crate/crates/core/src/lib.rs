//! Dyadic moral judgment: perceived minds, harm edges between them, and a
//! fixed pipeline that compresses scenarios into agent-patient dyads and
//! scores each one.
//!
//! ```
//! use dyadic_core::{judge, parse_scenario, CultureProfile};
//!
//! let graph = parse_scenario(
//!     "scenario \"rock\"\nentity vandal { intentionality: 0.9 }\nentity rock { vulnerability: 0 }\naction vandal -> rock { causality: 1 }\n",
//! )
//! .unwrap();
//! let j = judge(&graph, &CultureProfile::default()).unwrap();
//! assert_eq!(j.total_wrongness, 0.0);
//! ```

pub mod dsl;
pub mod engine;
pub mod export;
pub mod model;
pub mod normalize;
pub mod operators;
pub mod perception;
pub mod policy;
pub mod profile;

pub use dsl::{parse_scenario, serialize_graph, ParseError, ParseErrorKind};
pub use engine::{explain, judge, score_dyad, JudgeError};
pub use export::{export, export_json, export_records, export_text, ExportFormat};
pub use model::{
    snapshot, validate_graph, Classification, DyadRecord, DyadicGraph, EntityKind, EntityNode, HarmEdge, Judgment,
    ObligationEdge, TraceStep,
};
pub use policy::{apply_precommitment, detect_conflicts, export_reports, plan_resolution, ConflictKind, ConflictReport};
pub use profile::{load_profile, CultureProfile};
