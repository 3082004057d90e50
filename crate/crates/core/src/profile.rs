//! Culture profiles: every scoped parameter the engine reads, plus the
//! in-group / out-group perception shift applied before any operator.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::dsl::syntax::{lex, write_number, write_string, Cursor, Entry, ParseError, ParseErrorKind, Value};
use crate::model::{fmt_num, DyadicGraph, TraceStep};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InferenceMode {
    #[default]
    Heuristic,
    Bayesian,
}

impl InferenceMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InferenceMode::Heuristic => "heuristic",
            InferenceMode::Bayesian => "bayesian",
        }
    }
}

/// How a group's members combine into the group node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// The group is as culpable (or as vulnerable) as its most extreme member.
    #[default]
    Max,
    Mean,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::Max => "max",
            Aggregation::Mean => "mean",
        }
    }
}

/// Scoped parameter set standing in for one community's mind perception.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CultureProfile {
    pub name: String,
    /// Act category → wrongness weight `k` (categories not listed use 1.0).
    pub k_map: BTreeMap<String, f64>,
    /// Wrongness exponent.
    pub alpha: f64,
    /// Typecasting sensitivity; the coupling threshold is `1 - sigma_t`.
    pub sigma_t: f64,
    pub delta_p_ingroup: f64,
    pub delta_a_outgroup: f64,
    /// Gain of the negative-valence intent boost.
    pub knobe_gain: f64,
    /// Vulnerability of a synthetic diffuse patient ("society").
    pub default_diffuse_p: f64,
    /// Intentionality of a synthetic system agent; also the attenuation for
    /// ungrounded institutions.
    pub default_system_a: f64,
    /// Chain intermediaries below this intentionality collapse into tools.
    pub tool_threshold: f64,
    /// Closeness of A and P below which typecasting flickers.
    pub tie_epsilon: f64,
    /// Exogenous sufficiency at or above which harm is a tragedy.
    pub tragedy_threshold: f64,
    pub observer_community: Option<String>,
    pub inference_mode: InferenceMode,
    /// Rate of harm under zero intent, in `[0, 1)`.
    pub bayes_background: f64,
    pub bayes_grid: Vec<f64>,
    /// Share of prior mass spread to the grid ends, in `[0, 1]`.
    pub bayes_prior_spread: f64,
    pub group_aggregation: Aggregation,
}

impl Default for CultureProfile {
    fn default() -> Self {
        Self {
            name: "default".into(),
            k_map: BTreeMap::new(),
            alpha: 1.0,
            sigma_t: 0.0,
            delta_p_ingroup: 0.0,
            delta_a_outgroup: 0.0,
            knobe_gain: 0.0,
            default_diffuse_p: 0.5,
            default_system_a: 0.5,
            tool_threshold: 0.3,
            tie_epsilon: 0.05,
            tragedy_threshold: 0.5,
            observer_community: None,
            inference_mode: InferenceMode::Heuristic,
            bayes_background: 0.1,
            bayes_grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
            bayes_prior_spread: 0.5,
            group_aggregation: Aggregation::Max,
        }
    }
}

impl CultureProfile {
    pub fn k_for(&self, category: &str) -> f64 {
        self.k_map.get(category).copied().unwrap_or(1.0)
    }

    /// Returns every violated invariant as a message.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (cat, k) in &self.k_map {
            if !(*k > 0.0 && k.is_finite()) {
                out.push(format!("k for `{cat}` must be positive, got {k}"));
            }
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            out.push(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.tie_epsilon > 0.0 && self.tie_epsilon.is_finite()) {
            out.push(format!("tie_epsilon must be positive, got {}", self.tie_epsilon));
        }
        for (name, v) in [
            ("sigma_t", self.sigma_t),
            ("delta_p_ingroup", self.delta_p_ingroup),
            ("delta_a_outgroup", self.delta_a_outgroup),
            ("knobe_gain", self.knobe_gain),
            ("default_diffuse_p", self.default_diffuse_p),
            ("default_system_a", self.default_system_a),
            ("tool_threshold", self.tool_threshold),
            ("tragedy_threshold", self.tragedy_threshold),
            ("bayes_prior_spread", self.bayes_prior_spread),
        ] {
            if !(0.0..=1.0).contains(&v) {
                out.push(format!("{name} = {v} outside [0, 1]"));
            }
        }
        if !(0.0..1.0).contains(&self.bayes_background) {
            out.push(format!("bayes_background = {} outside [0, 1)", self.bayes_background));
        }
        if self.bayes_grid.is_empty() {
            out.push("bayes_grid is empty".into());
        }
        if self.bayes_grid.iter().any(|g| !(0.0..=1.0).contains(g)) {
            out.push("bayes_grid levels must lie in [0, 1]".into());
        }
        if self.bayes_grid.windows(2).any(|w| w[0] >= w[1]) {
            out.push("bayes_grid must be strictly increasing".into());
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }

    /// Dumps every field, defaulted or not, in profile syntax. Loading the
    /// dump yields the same profile.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "name: {}", write_string(&self.name));
        let k: Vec<String> = self
            .k_map
            .iter()
            .map(|(c, k)| format!("{}: {}", write_string(c), write_number(*k)))
            .collect();
        let _ = writeln!(s, "k_map: {{ {} }}", k.join(", "));
        for (key, v) in [
            ("alpha", self.alpha),
            ("sigma_t", self.sigma_t),
            ("delta_p_ingroup", self.delta_p_ingroup),
            ("delta_a_outgroup", self.delta_a_outgroup),
            ("knobe_gain", self.knobe_gain),
            ("default_diffuse_p", self.default_diffuse_p),
            ("default_system_a", self.default_system_a),
            ("tool_threshold", self.tool_threshold),
            ("tie_epsilon", self.tie_epsilon),
            ("tragedy_threshold", self.tragedy_threshold),
        ] {
            let _ = writeln!(s, "{key}: {}", write_number(v));
        }
        match &self.observer_community {
            Some(c) => {
                let _ = writeln!(s, "observer_community: {}", write_string(c));
            }
            None => {
                let _ = writeln!(s, "observer_community: none");
            }
        }
        let _ = writeln!(s, "inference_mode: {}", self.inference_mode.as_str());
        let _ = writeln!(s, "bayes_background: {}", write_number(self.bayes_background));
        let grid: Vec<String> = self.bayes_grid.iter().map(|g| write_number(*g)).collect();
        let _ = writeln!(s, "bayes_grid: [{}]", grid.join(", "));
        let _ = writeln!(s, "bayes_prior_spread: {}", write_number(self.bayes_prior_spread));
        let _ = writeln!(s, "group_aggregation: {}", self.group_aggregation.as_str());
        s
    }
}

/// Parses a profile file: top-level `key: value` entries; omitted keys
/// take their defaults.
pub fn load_profile(source: &str) -> Result<CultureProfile, Vec<ParseError>> {
    let tokens = lex(source)?;
    let mut cur = Cursor::new(&tokens);
    let entries = cur.entries_until(None).map_err(|e| vec![e])?;
    let mut profile = CultureProfile::default();
    let mut errors = Vec::new();
    for entry in &entries {
        if let Err(e) = apply_key(&mut profile, entry) {
            errors.push(e);
        }
    }
    if errors.is_empty() {
        // Cross-field invariants not tied to one literal.
        for msg in profile.violations() {
            errors.push(crate::dsl::syntax::Pos::START.error(ParseErrorKind::Range, msg));
        }
    }
    if errors.is_empty() {
        Ok(profile)
    } else {
        Err(errors)
    }
}

fn range(entry: &Entry, msg: String) -> ParseError {
    entry.value_pos.error(ParseErrorKind::Range, msg)
}

fn apply_key(p: &mut CultureProfile, entry: &Entry) -> Result<(), ParseError> {
    match entry.key.as_str() {
        "name" => p.name = entry.text()?.to_string(),
        "k_map" => {
            let Value::Map(items) = &entry.value else {
                return Err(entry.value_pos.error(ParseErrorKind::Syntax, "`k_map` expects a map"));
            };
            p.k_map.clear();
            for item in items {
                let k = item.num()?;
                if k <= 0.0 {
                    return Err(range(item, format!("k for `{}` must be positive, got {k}", item.key)));
                }
                p.k_map.insert(item.key.clone(), k);
            }
        }
        "alpha" => {
            let a = entry.num()?;
            if a <= 0.0 {
                return Err(range(entry, format!("alpha must be positive, got {a}")));
            }
            p.alpha = a;
        }
        "tie_epsilon" => {
            let e = entry.num()?;
            if e <= 0.0 {
                return Err(range(entry, format!("tie_epsilon must be positive, got {e}")));
            }
            p.tie_epsilon = e;
        }
        "sigma_t" => p.sigma_t = entry.unit()?,
        "delta_p_ingroup" => p.delta_p_ingroup = entry.unit()?,
        "delta_a_outgroup" => p.delta_a_outgroup = entry.unit()?,
        "knobe_gain" => p.knobe_gain = entry.unit()?,
        "default_diffuse_p" => p.default_diffuse_p = entry.unit()?,
        "default_system_a" => p.default_system_a = entry.unit()?,
        "tool_threshold" => p.tool_threshold = entry.unit()?,
        "tragedy_threshold" => p.tragedy_threshold = entry.unit()?,
        "bayes_prior_spread" => p.bayes_prior_spread = entry.unit()?,
        "bayes_background" => {
            let b = entry.num()?;
            if !(0.0..1.0).contains(&b) {
                return Err(range(entry, format!("bayes_background = {b} outside [0, 1)")));
            }
            p.bayes_background = b;
        }
        "observer_community" => {
            p.observer_community = match &entry.value {
                Value::Ident(s) if s == "none" => None,
                _ => Some(entry.text()?.to_string()),
            }
        }
        "inference_mode" => {
            p.inference_mode = match entry.ident()? {
                "heuristic" => InferenceMode::Heuristic,
                "bayesian" => InferenceMode::Bayesian,
                other => {
                    return Err(entry.value_pos.error(
                        ParseErrorKind::Syntax,
                        format!("inference_mode must be heuristic or bayesian, got `{other}`"),
                    ))
                }
            }
        }
        "group_aggregation" => {
            p.group_aggregation = match entry.ident()? {
                "max" => Aggregation::Max,
                "mean" => Aggregation::Mean,
                other => {
                    return Err(entry.value_pos.error(
                        ParseErrorKind::Syntax,
                        format!("group_aggregation must be max or mean, got `{other}`"),
                    ))
                }
            }
        }
        "bayes_grid" => {
            let Value::List(items) = &entry.value else {
                return Err(entry.value_pos.error(ParseErrorKind::Syntax, "`bayes_grid` expects a list"));
            };
            let mut grid = Vec::with_capacity(items.len());
            for (v, pos) in items {
                match v {
                    Value::Num(x) if (0.0..=1.0).contains(x) => grid.push(*x),
                    Value::Num(x) => {
                        return Err(pos.error(ParseErrorKind::Range, format!("grid level {x} outside [0, 1]")))
                    }
                    other => {
                        return Err(pos.error(
                            ParseErrorKind::Syntax,
                            format!("grid levels are numbers, found {}", other.type_name()),
                        ))
                    }
                }
            }
            if grid.is_empty() {
                return Err(range(entry, "bayes_grid is empty".into()));
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(range(entry, "bayes_grid must be strictly increasing".into()));
            }
            p.bayes_grid = grid;
        }
        _ => return Err(entry.unknown("profile")),
    }
    Ok(())
}

pub const GROUP_ADJUSTMENT: &str = "group_adjustment";

/// Shifts perceptions by community membership relative to the observer:
/// in-group vulnerability rises by `delta_p_ingroup`, out-group
/// intentionality by `delta_a_outgroup`, both clamped at 1.
///
/// Without an observer community every tagged entity counts as out-group.
pub fn apply_group_adjustments(
    graph: &DyadicGraph,
    profile: &CultureProfile,
) -> (DyadicGraph, Vec<TraceStep>) {
    let mut out = graph.clone();
    let mut trace = Vec::new();
    for e in out.entities.values_mut() {
        let Some(community) = e.community.as_deref() else {
            continue;
        };
        if profile.observer_community.as_deref() == Some(community) {
            let before = e.vulnerability;
            let after = (before + profile.delta_p_ingroup).min(1.0);
            if after != before {
                e.vulnerability = after;
                trace.push(
                    TraceStep::new(
                        GROUP_ADJUSTMENT,
                        &e.id,
                        format!("in-group `{community}`: vulnerability + {}", fmt_num(profile.delta_p_ingroup)),
                    )
                    .change("vulnerability", before, after),
                );
            }
        } else {
            let before = e.intentionality;
            let after = (before + profile.delta_a_outgroup).min(1.0);
            if after != before {
                e.intentionality = after;
                trace.push(
                    TraceStep::new(
                        GROUP_ADJUSTMENT,
                        &e.id,
                        format!("out-group `{community}`: intentionality + {}", fmt_num(profile.delta_a_outgroup)),
                    )
                    .change("intentionality", before, after),
                );
            }
        }
    }
    out.mark_applied(GROUP_ADJUSTMENT);
    (out, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EntityNode;

    #[test]
    fn neutral_profile_loads() {
        let p = load_profile("alpha: 1.0\nsigma_t: 0.0\ndelta_p_ingroup: 0, delta_a_outgroup: 0\n").unwrap();
        assert_eq!(p.alpha, 1.0);
        assert_eq!(p.sigma_t, 0.0);
        assert_eq!(p.knobe_gain, 0.0);
        assert_eq!(p, CultureProfile::default());
    }

    #[test]
    fn negative_alpha_is_range_error() {
        let errs = load_profile("alpha: -1\n").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].kind, ParseErrorKind::Range);
        let errs = load_profile("k_map: { taboo: 0 }").unwrap_err();
        assert_eq!(errs[0].kind, ParseErrorKind::Range);
    }

    #[test]
    fn unknown_key_is_named() {
        let errs = load_profile("alpah: 1\n").unwrap_err();
        assert_eq!(errs[0].kind, ParseErrorKind::UnknownKey);
        assert!(errs[0].message.contains("alpah"));
    }

    #[test]
    fn k_map_and_grid() {
        let p = load_profile("k_map: { taboo: 3.0 }\nbayes_grid: [0, 0.5, 1]\ninference_mode: bayesian").unwrap();
        assert_eq!(p.k_for("taboo"), 3.0);
        assert_eq!(p.k_for("theft"), 1.0);
        assert_eq!(p.bayes_grid, vec![0.0, 0.5, 1.0]);
        assert!(load_profile("bayes_grid: [0.5, 0.5]").is_err());
        assert!(load_profile("bayes_grid: []").is_err());
    }

    #[test]
    fn dump_reloads_to_same_profile() {
        let mut p = CultureProfile::default();
        p.name = "honour".into();
        p.k_map.insert("taboo".into(), 3.0);
        p.observer_community = Some("north".into());
        p.inference_mode = InferenceMode::Bayesian;
        p.group_aggregation = Aggregation::Mean;
        assert_eq!(load_profile(&p.dump()).unwrap(), p);
        assert_eq!(load_profile(&CultureProfile::default().dump()).unwrap(), CultureProfile::default());
    }

    fn tagged() -> DyadicGraph {
        DyadicGraph::new("g")
            .with_entity(EntityNode::individual("kin", 0.4, 0.5).with_community("north"))
            .with_entity(EntityNode::individual("foe", 0.9, 0.5).with_community("south"))
            .with_entity(EntityNode::individual("stranger", 0.4, 0.5))
    }

    #[test]
    fn in_and_out_group_shifts() {
        let mut p = CultureProfile::default();
        p.observer_community = Some("north".into());
        p.delta_p_ingroup = 0.2;
        p.delta_a_outgroup = 0.3;
        let (g, trace) = apply_group_adjustments(&tagged(), &p);
        assert!((g.entities["kin"].vulnerability - 0.7).abs() < 1e-12);
        assert_eq!(g.entities["kin"].intentionality, 0.4);
        assert_eq!(g.entities["foe"].intentionality, 1.0);
        assert_eq!(g.entities["stranger"], tagged().entities["stranger"]);
        assert_eq!(trace.len(), 2);
    }

    #[test]
    fn zero_deltas_leave_graph_untouched() {
        let mut p = CultureProfile::default();
        p.observer_community = Some("north".into());
        let (g, trace) = apply_group_adjustments(&tagged(), &p);
        assert!(trace.is_empty());
        assert_eq!(g.entities, tagged().entities);
    }
}
