//! Per-dyad psychological operators: typecasting, valence-dependent intent
//! inference (heuristic and grid Bayesian) and counterfactual appraisal.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{HarmEdge, Lock};

/// Slack allowed when testing `A * P <= tau`, so that a projected point is
/// recognised as satisfying the constraint.
const CONSTRAINT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suppressed {
    None,
    AgentSide,
    PatientSide,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypecastResult {
    pub intentionality_out: f64,
    pub vulnerability_out: f64,
    /// A and P are both high and too close to pick a frame; values pass through.
    pub complexity_flag: bool,
    pub suppressed_dimension: Suppressed,
}

/// Projects `(A, P)` onto `{A * P <= 1 - sigma}`.
///
/// Only the non-dominant coordinate moves; a lock overrides which one.
/// When neither dominates (`|A - P| < epsilon`) and nothing is locked the
/// result is flagged complex and left unchanged.
pub fn typecast(a: f64, p: f64, sigma: f64, lock: Lock, epsilon: f64) -> TypecastResult {
    let tau = 1.0 - sigma;
    let unchanged = |complex| TypecastResult {
        intentionality_out: a,
        vulnerability_out: p,
        complexity_flag: complex,
        suppressed_dimension: Suppressed::None,
    };
    if a * p <= tau + CONSTRAINT_SLACK {
        return unchanged(false);
    }
    let suppress_patient = match lock {
        Lock::LockedAgent => true,
        Lock::LockedPatient => false,
        Lock::None => {
            if (a - p).abs() < epsilon {
                return unchanged(true);
            }
            a > p
        }
    };
    // A * P > tau >= 0, so the dominant coordinate is strictly positive.
    if suppress_patient {
        TypecastResult {
            intentionality_out: a,
            vulnerability_out: tau / a,
            complexity_flag: false,
            suppressed_dimension: Suppressed::PatientSide,
        }
    } else {
        TypecastResult {
            intentionality_out: tau / p,
            vulnerability_out: p,
            complexity_flag: false,
            suppressed_dimension: Suppressed::AgentSide,
        }
    }
}

/// Negative outcomes pull inferred intent toward 1:
/// `A' = A + gain * (-valence) * S * (1 - A)` for `valence < 0`, else `A`.
pub fn infer_intent_heuristic(prior_a: f64, suffering: f64, valence: f64, knobe_gain: f64) -> f64 {
    if valence < 0.0 {
        let boosted = prior_a + knobe_gain * (-valence) * suffering * (1.0 - prior_a);
        boosted.clamp(prior_a, 1.0)
    } else {
        prior_a
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentPosterior {
    pub grid: Vec<f64>,
    pub masses: Vec<f64>,
    pub point_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BayesError {
    #[error("evidence has zero likelihood under every level the prior supports")]
    DegenerateEvidence,
    #[error("prior is malformed: {0}")]
    BadPrior(String),
}

impl IntentPosterior {
    /// Normalises nonnegative weights into a distribution on `grid`.
    pub fn from_weights(grid: Vec<f64>, weights: Vec<f64>) -> Result<Self, BayesError> {
        if grid.len() != weights.len() || grid.is_empty() {
            return Err(BayesError::BadPrior("grid and masses differ in length".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(BayesError::BadPrior("negative mass".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(BayesError::DegenerateEvidence);
        }
        let masses: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let point_estimate = grid.iter().zip(&masses).map(|(g, m)| g * m).sum();
        Ok(Self {
            grid,
            masses,
            point_estimate,
        })
    }

    pub fn uniform(grid: Vec<f64>) -> Self {
        let n = grid.len();
        Self::from_weights(grid, vec![1.0; n]).expect("nonempty grid")
    }

    /// Prior whose mean equals `a` (clamped to the grid hull): a share
    /// `1 - spread` is split between the two levels bracketing `a`, and a
    /// share `spread` between the two ends of the grid.
    pub fn centred_on(grid: &[f64], a: f64, spread: f64) -> Self {
        let n = grid.len();
        let mut w = vec![0.0; n];
        let (lo, hi) = (grid[0], grid[n - 1]);
        let a = a.clamp(lo, hi);
        let split = |w: &mut [f64], i: usize, j: usize, share: f64| {
            if i == j || grid[j] == grid[i] {
                w[i] += share;
            } else {
                let t = (a - grid[i]) / (grid[j] - grid[i]);
                w[i] += share * (1.0 - t);
                w[j] += share * t;
            }
        };
        let j = grid.iter().position(|g| *g >= a).unwrap_or(n - 1);
        let i = if grid[j] == a || j == 0 { j } else { j - 1 };
        split(&mut w, i, j, 1.0 - spread);
        split(&mut w, 0, n - 1, spread);
        Self::from_weights(grid.to_vec(), w).expect("positive total mass")
    }
}

/// Likelihood of observing suffering at intent `a` and causality `h`.
pub fn suffering_likelihood(a: f64, h: f64, background: f64) -> f64 {
    background + (1.0 - background) * a * h
}

/// Grid Bayes update `Pr(A | S, H) ∝ Pr(S | A, H) Pr(A)`.
pub fn infer_intent_bayes(
    prior: &IntentPosterior,
    suffering_observed: bool,
    causality: f64,
    background: f64,
) -> Result<IntentPosterior, BayesError> {
    let weights = prior
        .grid
        .iter()
        .zip(&prior.masses)
        .map(|(&a, &m)| {
            let l = suffering_likelihood(a, causality, background);
            m * if suffering_observed { l } else { 1.0 - l }
        })
        .collect();
    IntentPosterior::from_weights(prior.grid.clone(), weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppraisalClass {
    MindCaused,
    Tragedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppraisalResult {
    pub classification: AppraisalClass,
    pub reassigned_agent: Option<String>,
}

/// Id of the system agent blamed for a tragedy.
pub const SYSTEM_AGENT: &str = "system";

/// Asks whether the outcome would have happened under `do(A = 0)`.
/// Sufficiency at or above the threshold makes it a tragedy.
pub fn appraise_counterfactual(edge: &HarmEdge, tragedy_threshold: f64) -> AppraisalResult {
    if edge.exogenous_sufficiency >= tragedy_threshold {
        AppraisalResult {
            classification: AppraisalClass::Tragedy,
            reassigned_agent: Some(SYSTEM_AGENT.to_string()),
        }
    } else {
        AppraisalResult {
            classification: AppraisalClass::MindCaused,
            reassigned_agent: None,
        }
    }
}
