//! Invariants over randomly generated inputs. Each case draws a seed and
//! builds its graph or profile from the shared generators.

mod common;

use common::*;
use dyadic_core::model::{AgencyRequirement, Direction, Lock};
use dyadic_core::normalize::{complete_dyad, compress_collectives};
use dyadic_core::operators::{infer_intent_bayes, infer_intent_heuristic, typecast, IntentPosterior, Suppressed};
use dyadic_core::policy::{apply_precommitment, detect_conflicts, ResolutionStep};
use dyadic_core::profile::{apply_group_adjustments, InferenceMode};
use dyadic_core::{
    export_text, judge, score_dyad, Classification, CultureProfile, DyadicGraph, EntityNode, HarmEdge,
};
use proptest::prelude::*;
use rand::Rng;

fn unit_f() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64]
}

fn lock_s() -> impl Strategy<Value = Lock> {
    prop_oneof![Just(Lock::None), Just(Lock::LockedAgent), Just(Lock::LockedPatient)]
}

fn pair_graph(a: f64, p: f64, h: f64, s: f64, v: f64) -> DyadicGraph {
    let mut e = HarmEdge::new("e", "x", "y");
    e.causality = h;
    e.suffering = s;
    e.valence = v;
    DyadicGraph::new("pair")
        .with_entity(EntityNode::individual("x", a, 0.2))
        .with_entity(EntityNode::individual("y", 0.1, p))
        .with_edge(e)
}

/// Largest value of the yielding coordinate that satisfies the
/// constraint, found by bisection.
fn bisect_bound(fixed: f64, value: f64, tau: f64) -> f64 {
    if fixed * value <= tau {
        return value;
    }
    let (mut lo, mut hi) = (0.0, value);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fixed * mid <= tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn typecast_matches_constrained_minimisation(
        a in unit_f(), p in unit_f(), sigma in unit_f(), lk in lock_s(), eps in 0.001..0.2f64,
    ) {
        let r = typecast(a, p, sigma, lk, eps);
        let tau = 1.0 - sigma;
        match r.suppressed_dimension {
            Suppressed::None => {
                prop_assert_eq!((r.intentionality_out, r.vulnerability_out), (a, p));
                prop_assert!(r.complexity_flag || a * p <= tau + 1e-12);
            }
            Suppressed::PatientSide => {
                prop_assert_eq!(r.intentionality_out, a);
                prop_assert!((r.vulnerability_out - bisect_bound(a, p, tau)).abs() <= 1e-9);
            }
            Suppressed::AgentSide => {
                prop_assert_eq!(r.vulnerability_out, p);
                prop_assert!((r.intentionality_out - bisect_bound(p, a, tau)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn heuristic_and_bayes_agree_on_direction(
        a in unit_f(), s in 0.01..=1.0f64, h in 0.01..=1.0f64, gain in unit_f(),
        spread in unit_f(), bg in 0.0..0.9f64,
    ) {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let heuristic = infer_intent_heuristic(a, s, -1.0, gain);
        let prior = IntentPosterior::centred_on(&grid, a, spread);
        prop_assert!((prior.point_estimate - a).abs() <= 1e-12);
        let bayes = infer_intent_bayes(&prior, true, h, bg).unwrap().point_estimate;
        prop_assert!(heuristic >= a);
        prop_assert!(bayes >= a - 1e-12, "bayes {} fell below prior {}", bayes, a);
    }

    #[test]
    fn bayes_estimate_rises_with_causality(
        h1 in unit_f(), h2 in unit_f(), bg in 0.0..0.9f64, weights in prop::collection::vec(0.01..1.0f64, 5),
    ) {
        let (lo, hi) = (h1.min(h2), h1.max(h2));
        let grid = vec![0.0, 0.25, 0.5, 0.75, 1.0];
        let prior = IntentPosterior::from_weights(grid, weights).unwrap();
        let at = |h| infer_intent_bayes(&prior, true, h, bg).unwrap().point_estimate;
        prop_assert!(at(hi) >= at(lo) - 1e-12);
    }

    #[test]
    fn wrongness_rises_with_causality(seed in any::<u64>(), a in unit_f(), p in unit_f(), h1 in unit_f(), h2 in unit_f(), s in unit_f(), v in -1.0..=1.0f64) {
        let mut rng = rng(seed);
        let mut profile = profile(&mut rng);
        if profile.inference_mode == InferenceMode::Bayesian {
            // Typecasting can lower the product as the inferred intent
            // crosses the tie band, so the Bayesian side runs unconstrained.
            profile.sigma_t = 0.0;
        }
        let (lo, hi) = (h1.min(h2), h1.max(h2));
        let w = |h| judge(&pair_graph(a, p, h, s, v), &profile).unwrap().total_wrongness;
        prop_assert!(w(hi) >= w(lo), "W({}) = {} < W({}) = {}", hi, w(hi), lo, w(lo));
    }

    #[test]
    fn scaling_severity_preserves_ranking(seed in any::<u64>(), c in 0.01..100.0f64) {
        let mut rng = rng(seed);
        let g = small_graph(&mut rng);
        let mut base = profile(&mut rng);
        for cat in CATEGORIES {
            let k = base.k_for(cat);
            base.k_map.insert(cat.to_string(), k);
        }
        let mut scaled = base.clone();
        for k in scaled.k_map.values_mut() {
            *k *= c;
        }
        let w0: Vec<f64> = judge(&g, &base).unwrap().dyad_records.iter().map(|r| r.wrongness).collect();
        let w1: Vec<f64> = judge(&g, &scaled).unwrap().dyad_records.iter().map(|r| r.wrongness).collect();
        prop_assert_eq!(w0.len(), w1.len());
        for i in 0..w0.len() {
            prop_assert!((w1[i] - c * w0[i]).abs() <= 1e-12 * (1.0 + c * w0[i]));
            for j in 0..w0.len() {
                if w0[i] < w0[j] {
                    prop_assert!(w1[i] <= w1[j]);
                }
                if w0[i] == w0[j] {
                    prop_assert_eq!(w1[i], w1[j]);
                }
            }
        }
    }

    #[test]
    fn larger_exponent_shrinks_sub_unit_products(
        a in 0.01..0.99f64, p in 0.01..0.99f64, h in 0.01..=1.0f64, k in 0.1..5.0f64,
        x1 in 0.1..4.0f64, x2 in 0.1..4.0f64,
    ) {
        let (lo, hi) = (x1.min(x2), x1.max(x2));
        prop_assert!(score_dyad(a, p, h, k, hi) <= score_dyad(a, p, h, k, lo));
    }

    #[test]
    fn judging_is_deterministic(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let g = small_graph(&mut rng);
        let profile = profile(&mut rng);
        let first = judge(&g, &profile).unwrap();
        let second = judge(&g.clone(), &profile.clone()).unwrap();
        prop_assert_eq!(export_text(&first), export_text(&second));
    }

    #[test]
    fn adjustments_only_raise_values(seed in any::<u64>(), extra in 0.0..0.5f64) {
        let mut rng = rng(seed);
        let g = partial_graph(&mut rng, 5, 0);
        let low = profile(&mut rng);
        let high = CultureProfile {
            delta_p_ingroup: low.delta_p_ingroup + extra,
            delta_a_outgroup: low.delta_a_outgroup + extra,
            ..low.clone()
        };
        let (lo, _) = apply_group_adjustments(&g, &low);
        let (hi, _) = apply_group_adjustments(&g, &high);
        for (id, before) in &g.entities {
            let (l, h) = (&lo.entities[id], &hi.entities[id]);
            prop_assert!(l.intentionality >= before.intentionality && l.vulnerability >= before.vulnerability);
            prop_assert!(h.intentionality >= l.intentionality && h.vulnerability >= l.vulnerability);
            prop_assert!(h.intentionality <= 1.0 && h.vulnerability <= 1.0);
        }
    }

    #[test]
    fn passes_never_drop_declared_entities(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let g = small_graph(&mut rng);
        let profile = profile(&mut rng);
        let (adjusted, _) = apply_group_adjustments(&g, &profile);
        let (completed, _) = complete_dyad(&adjusted, &profile);
        let (compressed, _) = compress_collectives(&completed, &profile);
        for graph in [&adjusted, &completed, &compressed] {
            for id in g.entities.keys() {
                prop_assert!(graph.entities.contains_key(id), "entity {} dropped", id);
            }
        }
    }

    #[test]
    fn priority_is_a_permutation_and_plan_holds(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ids = ["ai", "user", "public"];
        let mut g = DyadicGraph::new("obligations");
        for id in ids {
            g.insert_entity(EntityNode::individual(id, unit(&mut rng), unit(&mut rng)));
        }
        let n = rng.gen_range(2..=5);
        for k in 0..n {
            let agent = if rng.gen_bool(0.7) { "ai" } else { ids[rng.gen_range(0..3)] };
            let patient = loop {
                let p = ids[rng.gen_range(0..3)];
                if p != agent {
                    break p;
                }
            };
            let dir = if rng.gen_bool(0.5) { Direction::Promote } else { Direction::Prevent };
            let tag = ["answer", "refuse"][rng.gen_range(0..2)];
            let by = [None, Some("user"), Some("public")][rng.gen_range(0..3)];
            let agency = [AgencyRequirement::None, AgencyRequirement::Low, AgencyRequirement::High][rng.gen_range(0..3)];
            g.obligations.push(obligation(&format!("o{k}"), agent, patient, dir, tag, by, agency));
        }
        let profile = profile(&mut rng);
        for report in detect_conflicts(&g.obligations, &g, &profile).unwrap() {
            let mut listed: Vec<&String> = report.priority.iter().map(|p| &p.obligation_id).collect();
            listed.sort();
            let mut declared: Vec<&String> = report.obligations.iter().collect();
            declared.sort();
            prop_assert_eq!(listed, declared);
            for pair in report.priority.windows(2) {
                prop_assert!(pair[0].wrongness >= pair[1].wrongness);
            }

            let order: Vec<String> = report.priority.iter().map(|p| p.obligation_id.clone()).collect();
            prop_assert_eq!(&report.plan[0], &ResolutionStep::SequentialStaging { order: order.clone() });
            let has_review = report.plan.iter().any(|s| matches!(s, ResolutionStep::IntermediaryInsertion { .. }));
            prop_assert_eq!(has_review, report.kind.is_structural());
            let last = order.last().unwrap().clone();
            prop_assert_eq!(
                report.plan.last().unwrap(),
                &ResolutionStep::PrecommitmentCommunication { deviating: last.clone() }
            );

            // After precommitment every dyad of the yielding obligation is
            // a tragedy or scores nothing.
            let ob = g.obligations.iter().find(|o| o.id == last).unwrap();
            let applied = apply_precommitment(&g, &report);
            let j = judge(&applied, &profile).unwrap();
            let hits: Vec<_> = j.dyad_records.iter().filter(|r| r.patient_id == ob.patient_id).collect();
            prop_assert!(!hits.is_empty());
            for r in hits {
                prop_assert_eq!(r.agent_id.as_str(), "system");
                prop_assert!(matches!(r.classification, Classification::Tragedy | Classification::Neutral));
            }
        }
    }
}
