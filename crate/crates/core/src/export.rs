//! Judgment export.
//!
//! The text form lists fields in a fixed order, one per line, with every
//! number at nine fractional digits:
//!
//! ```text
//! scenario: "middleman"
//! profile: "default"
//! total_wrongness: 0.583200000
//! dyad order+deliver
//!   agent: boss
//!   patient: victim
//!   stage: 1
//!   intentionality: 0.900000000
//!   vulnerability: 0.900000000
//!   causality: 0.720000000
//!   suffering: 0.700000000
//!   wrongness: 0.583200000
//!   classification: wrong
//! trace
//!   [chain] clerk: instrument below threshold 0.300000000; ...
//!     causality: 0.800000000 -> 0.720000000
//!     residual_blame: - -> 0.100000000
//! ```
//!
//! Each `dyad` block may be followed by `attribution <group>` blocks
//! (`role`, `group_size`, `effective_size`, `per_member`,
//! `per_member_wrongness`). The records-only form stops before `trace`.

use std::fmt::Write;

use serde::Serialize;

use crate::model::{fmt_num, DyadRecord, Judgment, TraceStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExportFormat {
    #[default]
    Text,
    Json,
}

impl ExportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "text" => Some(Self::Text),
            "json" => Some(Self::Json),
            _ => None,
        }
    }
}

fn write_record(out: &mut String, r: &DyadRecord) {
    let _ = writeln!(out, "dyad {}", r.edge_id);
    let _ = writeln!(out, "  agent: {}", r.agent_id);
    let _ = writeln!(out, "  patient: {}", r.patient_id);
    let _ = writeln!(out, "  stage: {}", r.stage.map_or("-".to_string(), |s| s.to_string()));
    for (key, v) in [
        ("intentionality", r.a_final),
        ("vulnerability", r.p_final),
        ("causality", r.h),
        ("suffering", r.s),
        ("wrongness", r.wrongness),
    ] {
        let _ = writeln!(out, "  {key}: {}", fmt_num(v));
    }
    let _ = writeln!(out, "  classification: {}", r.classification.as_str());
    for a in &r.attributions {
        let _ = writeln!(out, "  attribution {}", a.group_id);
        let _ = writeln!(out, "    role: {}", a.role.as_str());
        let _ = writeln!(out, "    group_size: {}", a.group_size);
        let _ = writeln!(out, "    effective_size: {}", fmt_num(a.effective_size));
        let _ = writeln!(out, "    per_member: {}", fmt_num(a.per_member));
        let _ = writeln!(out, "    per_member_wrongness: {}", fmt_num(a.per_member_wrongness));
    }
}

pub(crate) fn write_step(out: &mut String, indent: &str, step: &TraceStep) {
    let _ = writeln!(out, "{indent}[{}] {}: {}", step.pass, step.target, step.note);
    let keys: std::collections::BTreeSet<&String> = step.before.keys().chain(step.after.keys()).collect();
    for key in keys {
        let before = step.before.get(key).map_or("-", String::as_str);
        let after = step.after.get(key).map_or("-", String::as_str);
        let _ = writeln!(out, "{indent}  {key}: {before} -> {after}");
    }
}

/// Header and dyad records, without the trace.
pub fn export_records(j: &Judgment) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {:?}", j.scenario);
    let _ = writeln!(out, "profile: {:?}", j.profile);
    let _ = writeln!(out, "total_wrongness: {}", fmt_num(j.total_wrongness));
    for r in &j.dyad_records {
        write_record(&mut out, r);
    }
    out
}

pub fn export_text(j: &Judgment) -> String {
    let mut out = export_records(j);
    out.push_str("trace\n");
    for step in &j.trace {
        write_step(&mut out, "  ", step);
    }
    out
}

#[derive(Serialize)]
struct RecordsOnly<'a> {
    scenario: &'a str,
    profile: &'a str,
    dyad_records: &'a [DyadRecord],
    total_wrongness: f64,
}

pub fn export_json(j: &Judgment, with_trace: bool) -> String {
    let mut s = if with_trace {
        serde_json::to_string_pretty(j)
    } else {
        serde_json::to_string_pretty(&RecordsOnly {
            scenario: &j.scenario,
            profile: &j.profile,
            dyad_records: &j.dyad_records,
            total_wrongness: j.total_wrongness,
        })
    }
    .expect("judgments serialize");
    s.push('\n');
    s
}

pub fn export(j: &Judgment, format: ExportFormat, with_trace: bool) -> String {
    match (format, with_trace) {
        (ExportFormat::Text, true) => export_text(j),
        (ExportFormat::Text, false) => export_records(j),
        (ExportFormat::Json, t) => export_json(j, t),
    }
}
