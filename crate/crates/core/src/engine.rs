//! The judgment pipeline.
//!
//! Passes run in a fixed order: group adjustment, completion, collective
//! compression, chain decomposition, then per dyad intent inference,
//! counterfactual appraisal, typecasting and scoring.

use std::collections::BTreeMap;
use std::fmt::Write;

use thiserror::Error;

use crate::model::{
    fmt_num, validate_graph, Classification, DyadRecord, DyadicGraph, EntityKind, HarmEdge, Judgment, Lock,
    MemberAttribution, Role, TraceStep, Violation,
};
use crate::normalize::{complete_dyad, compress_collectives, decompose_chain, dilute, is_ungrounded, NormalizeError};
use crate::operators::{
    appraise_counterfactual, infer_intent_bayes, infer_intent_heuristic, typecast, AppraisalClass, IntentPosterior,
    Suppressed, SYSTEM_AGENT,
};
use crate::profile::{apply_group_adjustments, CultureProfile, InferenceMode};

pub const INTENT_INFERENCE: &str = "intent_inference";
pub const APPRAISAL: &str = "appraisal";
pub const TYPECAST: &str = "typecast";
pub const SCORING: &str = "scoring";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JudgeError {
    #[error("invalid scenario: {}", join(.0))]
    InvalidGraph(Vec<Violation>),
    #[error("invalid profile: {}", .0.join("; "))]
    InvalidProfile(Vec<String>),
    #[error(transparent)]
    Chain(#[from] NormalizeError),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// `W = k (A P H)^alpha`.
pub fn score_dyad(a: f64, p: f64, h: f64, k: f64, alpha: f64) -> f64 {
    k * (a * p * h).powf(alpha)
}

/// Runs the full pipeline over a validated graph.
pub fn judge(graph: &DyadicGraph, profile: &CultureProfile) -> Result<Judgment, JudgeError> {
    let violations = validate_graph(graph);
    if !violations.is_empty() {
        return Err(JudgeError::InvalidGraph(violations));
    }
    let problems = profile.violations();
    if !problems.is_empty() {
        return Err(JudgeError::InvalidProfile(problems));
    }

    let mut trace = Vec::new();
    let (g, t) = apply_group_adjustments(graph, profile);
    trace.extend(t);
    let (g, t) = complete_dyad(&g, profile);
    trace.extend(t);
    let (g, t) = compress_collectives(&g, profile);
    trace.extend(t);
    let mut stages = BTreeMap::new();
    let g = if g.chain_order.is_some() {
        let (d, g, t) = decompose_chain(&g, profile)?;
        trace.extend(t);
        stages.extend(d.dyads.into_iter().map(|(e, s)| (e.id, s)));
        g
    } else {
        g
    };

    let mut records = Vec::new();
    for edge in &g.edges {
        if !edge.is_closed() {
            trace.push(TraceStep::new(SCORING, &edge.id, "no agent and no suffering; not scored"));
            continue;
        }
        records.push(judge_dyad(&g, edge, stages.get(&edge.id).copied(), profile, &mut trace));
    }
    let total_wrongness = records.iter().map(|r| r.wrongness).sum();
    Ok(Judgment {
        scenario: graph.name.clone(),
        profile: profile.name.clone(),
        dyad_records: records,
        total_wrongness,
        trace,
    })
}

fn judge_dyad(
    g: &DyadicGraph,
    edge: &HarmEdge,
    stage: Option<u32>,
    profile: &CultureProfile,
    trace: &mut Vec<TraceStep>,
) -> DyadRecord {
    let agent = &g.entities[edge.agent_id.as_deref().expect("closed edge")];
    let patient = &g.entities[edge.patient_id.as_deref().expect("closed edge")];
    let (a0, p0) = (agent.intentionality, patient.vulnerability);
    let (h, s, v) = (edge.causality, edge.suffering, edge.valence);

    let (a1, note) = match profile.inference_mode {
        InferenceMode::Heuristic => (
            infer_intent_heuristic(a0, s, v, profile.knobe_gain),
            format!("heuristic, valence {}, suffering {}", fmt_num(v), fmt_num(s)),
        ),
        InferenceMode::Bayesian if v < 0.0 && s > 0.0 => {
            let prior = IntentPosterior::centred_on(&profile.bayes_grid, a0, profile.bayes_prior_spread);
            match infer_intent_bayes(&prior, true, h, profile.bayes_background) {
                Ok(post) => (post.point_estimate, "bayesian update on observed suffering".to_string()),
                Err(e) => (a0, format!("bayesian update skipped: {e}")),
            }
        }
        InferenceMode::Bayesian => (a0, "bayesian: no harmful outcome observed".to_string()),
    };
    trace.push(TraceStep::new(INTENT_INFERENCE, &edge.id, note).change("intentionality", a0, a1));

    let appraisal = appraise_counterfactual(edge, profile.tragedy_threshold);
    let tragedy = appraisal.classification == AppraisalClass::Tragedy;
    let (agent_id, a2, lock) = match &appraisal.reassigned_agent {
        Some(sys) => (sys.clone(), profile.default_system_a, patient.lock),
        None => (
            agent.id.clone(),
            a1,
            if agent.lock != Lock::None { agent.lock } else { patient.lock },
        ),
    };
    let step = TraceStep::new(
        APPRAISAL,
        &edge.id,
        if tragedy {
            format!(
                "outcome sufficient without the agent ({} >= {}); reassigned to `{SYSTEM_AGENT}`",
                fmt_num(edge.exogenous_sufficiency),
                fmt_num(profile.tragedy_threshold)
            )
        } else {
            "mind-caused".to_string()
        },
    );
    trace.push(if tragedy {
        step.before("agent", agent.id.clone())
            .after("agent", agent_id.clone())
            .change("intentionality", a1, a2)
    } else {
        step
    });

    let tc = typecast(a2, p0, profile.sigma_t, lock, profile.tie_epsilon);
    let (af, pf) = (tc.intentionality_out, tc.vulnerability_out);
    let note = match (tc.complexity_flag, tc.suppressed_dimension) {
        (true, _) => "agent and patient frames compete; values kept".to_string(),
        (false, Suppressed::None) => "within constraint".to_string(),
        (false, Suppressed::AgentSide) => "agent side suppressed".to_string(),
        (false, Suppressed::PatientSide) => "patient side suppressed".to_string(),
    };
    trace.push(
        TraceStep::new(TYPECAST, &edge.id, note)
            .change("intentionality", a2, af)
            .change("vulnerability", p0, pf),
    );

    let k = profile.k_for(&edge.act_category);
    let attenuation = if !tragedy && is_ungrounded(agent) {
        profile.default_system_a
    } else {
        1.0
    };
    let score = |a: f64, p: f64| score_dyad(a, p, h, k, profile.alpha) * attenuation;
    let wrongness = score(af, pf);
    let classification = if wrongness == 0.0 {
        Classification::Neutral
    } else if tragedy {
        Classification::Tragedy
    } else if tc.complexity_flag {
        Classification::Complex
    } else {
        Classification::Wrong
    };

    let mut attributions = Vec::new();
    if !tragedy && agent.kind == EntityKind::Group {
        let d = dilute(af, agent.group_size, agent.entitativity);
        attributions.push(MemberAttribution {
            group_id: agent.id.clone(),
            role: Role::Agent,
            group_size: agent.group_size,
            effective_size: d.effective_size,
            per_member: d.per_member,
            per_member_wrongness: score(d.per_member, pf),
        });
    }
    if patient.kind == EntityKind::Group {
        let d = dilute(pf, patient.group_size, patient.entitativity);
        attributions.push(MemberAttribution {
            group_id: patient.id.clone(),
            role: Role::Patient,
            group_size: patient.group_size,
            effective_size: d.effective_size,
            per_member: d.per_member,
            per_member_wrongness: score(af, d.per_member),
        });
    }

    let mut note = format!(
        "k {} ({}), alpha {}",
        fmt_num(k),
        edge.act_category,
        fmt_num(profile.alpha)
    );
    if attenuation != 1.0 {
        let _ = write!(note, ", ungrounded agent attenuated by {}", fmt_num(attenuation));
    }
    trace.push(TraceStep::new(SCORING, &edge.id, note).after("wrongness", fmt_num(wrongness)));

    DyadRecord {
        edge_id: edge.id.clone(),
        agent_id,
        patient_id: patient.id.clone(),
        stage,
        a_final: af,
        p_final: pf,
        h,
        s,
        wrongness,
        classification,
        attributions,
    }
}

/// Human-readable rendering of the trace: a header, then each step with
/// its before and after values.
pub fn explain(judgment: &Judgment) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "judgment of {:?} under profile {:?}: {} dyads, total wrongness {}",
        judgment.scenario,
        judgment.profile,
        judgment.dyad_records.len(),
        fmt_num(judgment.total_wrongness)
    );
    for (i, step) in judgment.trace.iter().enumerate() {
        let _ = write!(out, "{:>4}. ", i + 1);
        crate::export::write_step(&mut out, "", step);
    }
    out
}
