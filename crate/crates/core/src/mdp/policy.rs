//! Stochastic decision rules with exact probability queries.

use serde::{Deserialize, Serialize};

use crate::error::{OpeError, Result};

const PROB_TOL: f64 = 1e-9;

/// The parameterization a [`Policy`] was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    Tabular {
        probs: Vec<Vec<f64>>,
    },
    EpsilonGreedy {
        q: Vec<Vec<f64>>,
        epsilon: f64,
    },
    Softmax {
        q: Vec<Vec<f64>>,
        temperature: f64,
    },
    #[serde(rename = "gaussian_1d")]
    Gaussian1D {
        mean: Vec<f64>,
        std: Vec<f64>,
    },
}

/// A validated policy. Discrete kinds cache their full `π(a|s)` table at
/// construction, so probability queries are pure lookups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolicyKind", into = "PolicyKind")]
pub struct Policy {
    kind: PolicyKind,
    table: Option<ProbTable>,
}

#[derive(Debug, Clone, PartialEq)]
struct ProbTable {
    num_actions: usize,
    probs: Vec<f64>,
}

impl From<Policy> for PolicyKind {
    fn from(p: Policy) -> Self {
        p.kind
    }
}

impl TryFrom<PolicyKind> for Policy {
    type Error = OpeError;

    fn try_from(kind: PolicyKind) -> Result<Self> {
        Policy::from_kind(kind)
    }
}

fn check_q(q: &[Vec<f64>]) -> Result<usize> {
    let num_actions = q.first().map(Vec::len).unwrap_or(0);
    if q.is_empty() || num_actions == 0 {
        return Err(OpeError::param("q-table must have at least one state and one action"));
    }
    for (s, row) in q.iter().enumerate() {
        if row.len() != num_actions {
            return Err(OpeError::shape(format!(
                "q-table row {s} has {} actions, expected {num_actions}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(OpeError::param(format!("q-table row {s} contains a non-finite value")));
        }
    }
    Ok(num_actions)
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn greedy_action(row: &[f64]) -> usize {
    let mut best = 0;
    for (a, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = a;
        }
    }
    best
}

fn softmax_row(row: &[f64], temperature: f64) -> Vec<f64> {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| ((v - max) / temperature).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

fn gaussian_pdf(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
}

impl Policy {
    pub fn from_kind(kind: PolicyKind) -> Result<Self> {
        let table = match &kind {
            PolicyKind::Tabular { probs } => {
                let num_actions = probs.first().map(Vec::len).unwrap_or(0);
                if probs.is_empty() || num_actions == 0 {
                    return Err(OpeError::param("probability table is empty"));
                }
                let mut flat = Vec::with_capacity(probs.len() * num_actions);
                for (s, row) in probs.iter().enumerate() {
                    if row.len() != num_actions {
                        return Err(OpeError::shape(format!(
                            "probability row {s} has {} actions, expected {num_actions}",
                            row.len()
                        )));
                    }
                    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                        return Err(OpeError::param(format!(
                            "row {s} has a negative or non-finite probability"
                        )));
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > PROB_TOL {
                        return Err(OpeError::param(format!("row {s} sums to {sum}, not 1")));
                    }
                    flat.extend_from_slice(row);
                }
                Some(ProbTable {
                    num_actions,
                    probs: flat,
                })
            }
            PolicyKind::EpsilonGreedy { q, epsilon } => {
                let num_actions = check_q(q)?;
                if !(0.0..=1.0).contains(epsilon) {
                    return Err(OpeError::param(format!("epsilon {epsilon} outside [0, 1]")));
                }
                let uniform = epsilon / num_actions as f64;
                let mut flat = Vec::with_capacity(q.len() * num_actions);
                for row in q {
                    let best = greedy_action(row);
                    flat.extend((0..num_actions).map(|a| if a == best { (1.0 - epsilon) + uniform } else { uniform }));
                }
                Some(ProbTable {
                    num_actions,
                    probs: flat,
                })
            }
            PolicyKind::Softmax { q, temperature } => {
                let num_actions = check_q(q)?;
                if !(*temperature > 0.0) || !temperature.is_finite() {
                    return Err(OpeError::param(format!(
                        "temperature must be positive, got {temperature}"
                    )));
                }
                let flat = q.iter().flat_map(|row| softmax_row(row, *temperature)).collect();
                Some(ProbTable {
                    num_actions,
                    probs: flat,
                })
            }
            PolicyKind::Gaussian1D { mean, std } => {
                if mean.is_empty() || mean.len() != std.len() {
                    return Err(OpeError::shape("gaussian policy needs one mean and one std per state"));
                }
                if std.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
                    return Err(OpeError::param("gaussian policy std must be positive"));
                }
                if mean.iter().any(|m| !m.is_finite()) {
                    return Err(OpeError::param("gaussian policy mean must be finite"));
                }
                None
            }
        };
        Ok(Self { kind, table })
    }

    pub fn tabular(probs: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_kind(PolicyKind::Tabular { probs })
    }

    /// Uniform policy over `num_actions` actions in every state.
    pub fn uniform(num_states: usize, num_actions: usize) -> Result<Self> {
        Self::tabular(vec![vec![1.0 / num_actions as f64; num_actions]; num_states])
    }

    /// Deterministic policy taking `actions[s]` in state `s`.
    pub fn deterministic(actions: &[usize], num_actions: usize) -> Result<Self> {
        let probs = actions
            .iter()
            .map(|&a| {
                if a >= num_actions {
                    return Err(OpeError::shape(format!(
                        "action {a} out of range for {num_actions} actions"
                    )));
                }
                let mut row = vec![0.0; num_actions];
                row[a] = 1.0;
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::tabular(probs)
    }

    pub fn gaussian(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        Self::from_kind(PolicyKind::Gaussian1D { mean, std })
    }

    pub fn kind(&self) -> &PolicyKind {
        &self.kind
    }

    pub fn is_discrete(&self) -> bool {
        self.table.is_some()
    }

    pub fn num_states(&self) -> usize {
        match &self.kind {
            PolicyKind::Tabular { probs } => probs.len(),
            PolicyKind::EpsilonGreedy { q, .. } | PolicyKind::Softmax { q, .. } => q.len(),
            PolicyKind::Gaussian1D { mean, .. } => mean.len(),
        }
    }

    /// Number of discrete actions, `None` for continuous-action policies.
    pub fn num_actions(&self) -> Option<usize> {
        self.table.as_ref().map(|t| t.num_actions)
    }

    /// `π(a|s)` for a discrete policy. Panics on a continuous policy or an
    /// out-of-range index; callers validate shapes up front.
    pub fn prob(&self, state: usize, action: usize) -> f64 {
        let t = self.table.as_ref().expect("prob() called on a continuous policy");
        assert!(action < t.num_actions, "action {action} out of range");
        t.probs[state * t.num_actions + action]
    }

    /// Full action distribution `π(·|s)` for a discrete policy.
    pub fn action_probs(&self, state: usize) -> &[f64] {
        let t = self
            .table
            .as_ref()
            .expect("action_probs() called on a continuous policy");
        &t.probs[state * t.num_actions..(state + 1) * t.num_actions]
    }

    /// Mean and standard deviation of a Gaussian policy at `state`.
    pub fn gaussian_params(&self, state: usize) -> Option<(f64, f64)> {
        match &self.kind {
            PolicyKind::Gaussian1D { mean, std } => Some((mean[state], std[state])),
            _ => None,
        }
    }

    /// Density `π(a|s)` of a Gaussian policy.
    pub fn density(&self, state: usize, action: f64) -> Option<f64> {
        self.gaussian_params(state).map(|(m, s)| gaussian_pdf(action, m, s))
    }

    /// Noise injection used to diversify candidate suites.
    ///
    /// Discrete policies are mixed toward uniform, `π' = (1-ε)π + ε/|A|` with
    /// `ε = noise_level ∈ [0, 1]`. Gaussian policies get the noise added in
    /// quadrature, `σ' = sqrt(σ² + noise_level²)`.
    pub fn perturb(&self, noise_level: f64) -> Result<Policy> {
        if !(noise_level >= 0.0) || !noise_level.is_finite() {
            return Err(OpeError::param(format!(
                "noise level must be nonnegative, got {noise_level}"
            )));
        }
        if noise_level == 0.0 {
            return Ok(self.clone());
        }
        match &self.kind {
            PolicyKind::Gaussian1D { mean, std } => {
                let std = std.iter().map(|s| (s * s + noise_level * noise_level).sqrt()).collect();
                Policy::gaussian(mean.clone(), std)
            }
            PolicyKind::EpsilonGreedy { q, epsilon } => {
                check_mixing(noise_level)?;
                let eps = 1.0 - (1.0 - noise_level) * (1.0 - epsilon);
                make_epsilon_greedy_policy(q.clone(), eps.clamp(0.0, 1.0))
            }
            _ => {
                check_mixing(noise_level)?;
                let num_actions = self.num_actions().unwrap_or(1);
                let uniform = noise_level / num_actions as f64;
                let probs = (0..self.num_states())
                    .map(|s| {
                        self.action_probs(s)
                            .iter()
                            .map(|p| (1.0 - noise_level) * p + uniform)
                            .collect()
                    })
                    .collect();
                Policy::tabular(probs)
            }
        }
    }
}

fn check_mixing(noise_level: f64) -> Result<()> {
    if noise_level > 1.0 {
        return Err(OpeError::param(format!(
            "mixing level for a discrete policy must lie in [0, 1], got {noise_level}"
        )));
    }
    Ok(())
}

/// Boltzmann policy `π(a|s) ∝ exp(q(s,a)/τ)`, evaluated with max-subtraction.
pub fn make_softmax_policy(q: Vec<Vec<f64>>, temperature: f64) -> Result<Policy> {
    Policy::from_kind(PolicyKind::Softmax { q, temperature })
}

/// `π(a|s) = (1-ε)·1{a = argmax q(s,·)} + ε/|A|`, lowest index wins ties.
pub fn make_epsilon_greedy_policy(q: Vec<Vec<f64>>, epsilon: f64) -> Result<Policy> {
    Policy::from_kind(PolicyKind::EpsilonGreedy { q, epsilon })
}

/// Policy paired with a stable identifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedPolicy {
    pub id: String,
    pub policy: Policy,
}

impl NamedPolicy {
    pub fn new(id: impl Into<String>, policy: Policy) -> Self {
        Self { id: id.into(), policy }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn softmax_examples() {
        let p = make_softmax_policy(vec![vec![0.0, 0.0]], 1.0).unwrap();
        assert!(close(p.action_probs(0), &[0.5, 0.5]));
        let p = make_softmax_policy(vec![vec![1.0, 1.0, 1.0]], 0.3).unwrap();
        assert!(close(p.action_probs(0), &[1.0 / 3.0; 3]));
        let p = make_softmax_policy(vec![vec![2f64.ln(), 0.0]], 1.0).unwrap();
        assert!(close(p.action_probs(0), &[2.0 / 3.0, 1.0 / 3.0]));
    }

    #[test]
    fn softmax_rejects_nonpositive_temperature() {
        assert!(matches!(
            make_softmax_policy(vec![vec![0.0]], 0.0),
            Err(OpeError::Parameter(_))
        ));
        assert!(make_softmax_policy(vec![vec![0.0]], -1.0).is_err());
    }

    #[test]
    fn softmax_is_stable_for_large_logits() {
        let p = make_softmax_policy(vec![vec![1000.0, 999.0]], 1.0).unwrap();
        let e = 1.0f64.exp();
        assert!(close(p.action_probs(0), &[e / (1.0 + e), 1.0 / (1.0 + e)]));
    }

    #[test]
    fn epsilon_greedy_examples() {
        let q = vec![vec![0.2, 0.9, 0.1, 0.9]];
        let p = make_epsilon_greedy_policy(q.clone(), 0.0).unwrap();
        assert_eq!(p.action_probs(0), &[0.0, 1.0, 0.0, 0.0]);
        let p = make_epsilon_greedy_policy(q, 1.0).unwrap();
        assert_eq!(p.action_probs(0), &[0.25; 4]);
        let p = make_epsilon_greedy_policy(vec![vec![1.0, 0.0]], 0.5).unwrap();
        assert_eq!(p.action_probs(0), &[0.75, 0.25]);
    }

    #[test]
    fn epsilon_out_of_range_is_rejected() {
        assert!(make_epsilon_greedy_policy(vec![vec![0.0, 1.0]], 1.5).is_err());
        assert!(make_epsilon_greedy_policy(vec![vec![0.0, 1.0]], -0.1).is_err());
    }

    #[test]
    fn perturb_examples() {
        let base = Policy::deterministic(&[1, 0], 3).unwrap();
        assert_eq!(base.perturb(0.0).unwrap().action_probs(0), base.action_probs(0));
        let full = base.perturb(1.0).unwrap();
        assert!(close(full.action_probs(0), &[1.0 / 3.0; 3]));
        assert!(base.perturb(-0.1).is_err());

        let g = Policy::gaussian(vec![0.0], vec![1.0]).unwrap();
        let (_, s) = g.perturb(1.0).unwrap().gaussian_params(0).unwrap();
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn perturbing_epsilon_greedy_composes_mixing() {
        let q = vec![vec![1.0, 0.0]];
        let p = make_epsilon_greedy_policy(q.clone(), 0.2).unwrap();
        let mixed = p.perturb(0.5).unwrap();
        let expected: Vec<f64> = p.action_probs(0).iter().map(|x| 0.5 * x + 0.25).collect();
        assert!(close(mixed.action_probs(0), &expected));
    }

    #[test]
    fn json_round_trip_preserves_probabilities() {
        let p = make_softmax_policy(vec![vec![0.3, -1.2], vec![2.0, 2.0]], 0.7).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("\"kind\":\"softmax\""));
        let back: Policy = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn json_rejects_invalid_rows() {
        let bad = r#"{"kind":"tabular","probs":[[0.5,0.4]]}"#;
        assert!(serde_json::from_str::<Policy>(bad).is_err());
    }
}
