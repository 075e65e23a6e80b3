//! Environments, policies, and reproducible trajectory sampling.

mod policy;

pub use policy::{greedy_action, make_epsilon_greedy_policy, make_softmax_policy, NamedPolicy, Policy, PolicyKind};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{OpeError, Result};
use crate::rng::RngStream;

const PROB_TOL: f64 = 1e-9;

// ── Tabular MDP ─────────────────────────────────────────────────────────

/// Finite-horizon MDP with explicit transition and reward tables.
///
/// Tensors are stored flat in row-major order: `transition[(s*A + a)*S + s']`,
/// `reward_mean[s*A + a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTabularMdp", into = "RawTabularMdp")]
pub struct TabularMdp {
    id: String,
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    discount: f64,
    initial_dist: Vec<f64>,
    transition: Vec<f64>,
    reward_mean: Vec<f64>,
    reward_noise_std: Vec<f64>,
}

/// JSON shape of a [`TabularMdp`]: nested arrays, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawTabularMdp {
    #[serde(default)]
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_states: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_actions: Option<usize>,
    pub horizon: usize,
    pub discount: f64,
    pub initial_dist: Vec<f64>,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub reward_mean: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_noise_std: Option<Vec<Vec<f64>>>,
}

fn check_distribution(what: &str, row: &[f64]) -> Result<()> {
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(OpeError::param(format!("{what} has a negative or non-finite entry")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(OpeError::param(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

fn check_common(horizon: usize, discount: f64) -> Result<()> {
    if horizon == 0 {
        return Err(OpeError::param("horizon must be at least 1"));
    }
    if !(discount > 0.0 && discount <= 1.0) {
        return Err(OpeError::param(format!("discount {discount} outside (0, 1]")));
    }
    Ok(())
}

impl TryFrom<RawTabularMdp> for TabularMdp {
    type Error = OpeError;

    fn try_from(raw: RawTabularMdp) -> Result<Self> {
        let num_states = raw.transition.len();
        let num_actions = raw.transition.first().map(Vec::len).unwrap_or(0);
        if num_states == 0 || num_actions == 0 {
            return Err(OpeError::param("MDP needs at least one state and one action"));
        }
        if raw.num_states.is_some_and(|n| n != num_states) || raw.num_actions.is_some_and(|n| n != num_actions) {
            return Err(OpeError::shape(
                "declared num_states/num_actions disagree with the transition tensor",
            ));
        }
        check_common(raw.horizon, raw.discount)?;
        if raw.initial_dist.len() != num_states {
            return Err(OpeError::shape("initial_dist length differs from num_states"));
        }
        check_distribution("initial_dist", &raw.initial_dist)?;

        let mut transition = Vec::with_capacity(num_states * num_actions * num_states);
        for (s, per_action) in raw.transition.iter().enumerate() {
            if per_action.len() != num_actions {
                return Err(OpeError::shape(format!(
                    "transition[{s}] has {} actions",
                    per_action.len()
                )));
            }
            for (a, row) in per_action.iter().enumerate() {
                if row.len() != num_states {
                    return Err(OpeError::shape(format!(
                        "transition[{s}][{a}] has length {}",
                        row.len()
                    )));
                }
                check_distribution(&format!("transition[{s}][{a}]"), row)?;
                transition.extend_from_slice(row);
            }
        }

        let flatten = |name: &str, table: &[Vec<f64>], nonneg: bool| -> Result<Vec<f64>> {
            if table.len() != num_states || table.iter().any(|r| r.len() != num_actions) {
                return Err(OpeError::shape(format!("{name} must be {num_states}x{num_actions}")));
            }
            let flat: Vec<f64> = table.iter().flatten().copied().collect();
            if flat.iter().any(|v| !v.is_finite() || (nonneg && *v < 0.0)) {
                return Err(OpeError::param(format!("{name} has an invalid entry")));
            }
            Ok(flat)
        };
        let reward_mean = flatten("reward_mean", &raw.reward_mean, false)?;
        let reward_noise_std = match &raw.reward_noise_std {
            Some(t) => flatten("reward_noise_std", t, true)?,
            None => vec![0.0; num_states * num_actions],
        };

        Ok(Self {
            id: raw.id,
            num_states,
            num_actions,
            horizon: raw.horizon,
            discount: raw.discount,
            initial_dist: raw.initial_dist,
            transition,
            reward_mean,
            reward_noise_std,
        })
    }
}

impl From<TabularMdp> for RawTabularMdp {
    fn from(m: TabularMdp) -> Self {
        let (s_n, a_n) = (m.num_states, m.num_actions);
        let nest = |flat: &[f64]| -> Vec<Vec<f64>> { flat.chunks(a_n).map(<[f64]>::to_vec).collect() };
        let transition = (0..s_n)
            .map(|s| (0..a_n).map(|a| m.transition_row(s, a).to_vec()).collect())
            .collect();
        let noisy = m.reward_noise_std.iter().any(|v| *v != 0.0);
        RawTabularMdp {
            id: m.id.clone(),
            num_states: Some(s_n),
            num_actions: Some(a_n),
            horizon: m.horizon,
            discount: m.discount,
            initial_dist: m.initial_dist.clone(),
            transition,
            reward_mean: nest(&m.reward_mean),
            reward_noise_std: noisy.then(|| nest(&m.reward_noise_std)),
        }
    }
}

impl TabularMdp {
    /// Builds and validates an MDP from nested row-major tables.
    pub fn new(
        id: impl Into<String>,
        horizon: usize,
        discount: f64,
        initial_dist: Vec<f64>,
        transition: Vec<Vec<Vec<f64>>>,
        reward_mean: Vec<Vec<f64>>,
        reward_noise_std: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        RawTabularMdp {
            id: id.into(),
            num_states: None,
            num_actions: None,
            horizon,
            discount,
            initial_dist,
            transition,
            reward_mean,
            reward_noise_std,
        }
        .try_into()
    }

    pub fn id(&self) -> &str {
        &self.id
    }
    pub fn num_states(&self) -> usize {
        self.num_states
    }
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }
    pub fn horizon(&self) -> usize {
        self.horizon
    }
    pub fn discount(&self) -> f64 {
        self.discount
    }
    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }
    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.num_actions + a) * self.num_states;
        &self.transition[start..start + self.num_states]
    }
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward_mean[s * self.num_actions + a]
    }
    pub fn reward_noise_std(&self, s: usize, a: usize) -> f64 {
        self.reward_noise_std[s * self.num_actions + a]
    }
    pub fn is_deterministic(&self) -> bool {
        let point_mass = |row: &[f64]| row.iter().filter(|p| **p > 0.0).count() == 1;
        point_mass(&self.initial_dist)
            && self.reward_noise_std.iter().all(|s| *s == 0.0)
            && self.transition.chunks(self.num_states).all(point_mass)
    }

    pub fn check_policy(&self, policy: &Policy) -> Result<()> {
        if policy.num_states() != self.num_states || policy.num_actions() != Some(self.num_actions) {
            return Err(OpeError::shape(format!(
                "policy ({} states, {:?} actions) incompatible with MDP `{}` ({} states, {} actions)",
                policy.num_states(),
                policy.num_actions(),
                self.id,
                self.num_states,
                self.num_actions
            )));
        }
        Ok(())
    }
}

// ── Continuous-action MDP ───────────────────────────────────────────────

/// Discrete-state MDP with a scalar continuous action. Transition rows are
/// given at a sorted grid of action bins and linearly interpolated between
/// them (clamped outside the grid); the mean reward is affine in the action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawContinuousMdp", into = "RawContinuousMdp")]
pub struct ContinuousActionMdp {
    raw: RawContinuousMdp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawContinuousMdp {
    #[serde(default)]
    pub id: String,
    pub horizon: usize,
    pub discount: f64,
    pub initial_dist: Vec<f64>,
    pub action_bins: Vec<f64>,
    /// `[state][bin][next_state]`
    pub transition: Vec<Vec<Vec<f64>>>,
    pub reward_intercept: Vec<f64>,
    pub reward_slope: Vec<f64>,
    #[serde(default)]
    pub reward_noise_std: Vec<f64>,
}

impl TryFrom<RawContinuousMdp> for ContinuousActionMdp {
    type Error = OpeError;

    fn try_from(mut raw: RawContinuousMdp) -> Result<Self> {
        let n = raw.initial_dist.len();
        check_common(raw.horizon, raw.discount)?;
        if n == 0 {
            return Err(OpeError::param("MDP needs at least one state"));
        }
        check_distribution("initial_dist", &raw.initial_dist)?;
        if raw.action_bins.is_empty() || raw.action_bins.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(OpeError::param("action_bins must be nonempty and strictly increasing"));
        }
        if raw.transition.len() != n {
            return Err(OpeError::shape("transition must have one entry per state"));
        }
        for (s, per_bin) in raw.transition.iter().enumerate() {
            if per_bin.len() != raw.action_bins.len() {
                return Err(OpeError::shape(format!("transition[{s}] needs one row per action bin")));
            }
            for (b, row) in per_bin.iter().enumerate() {
                if row.len() != n {
                    return Err(OpeError::shape(format!(
                        "transition[{s}][{b}] has length {}",
                        row.len()
                    )));
                }
                check_distribution(&format!("transition[{s}][{b}]"), row)?;
            }
        }
        if raw.reward_noise_std.is_empty() {
            raw.reward_noise_std = vec![0.0; n];
        }
        if raw.reward_intercept.len() != n || raw.reward_slope.len() != n || raw.reward_noise_std.len() != n {
            return Err(OpeError::shape("reward parameters need one entry per state"));
        }
        if raw.reward_noise_std.iter().any(|v| !(*v >= 0.0)) {
            return Err(OpeError::param("reward_noise_std must be nonnegative"));
        }
        Ok(Self { raw })
    }
}

impl From<ContinuousActionMdp> for RawContinuousMdp {
    fn from(m: ContinuousActionMdp) -> Self {
        m.raw
    }
}

impl ContinuousActionMdp {
    pub fn new(raw: RawContinuousMdp) -> Result<Self> {
        raw.try_into()
    }
    pub fn id(&self) -> &str {
        &self.raw.id
    }
    pub fn num_states(&self) -> usize {
        self.raw.initial_dist.len()
    }
    pub fn horizon(&self) -> usize {
        self.raw.horizon
    }
    pub fn discount(&self) -> f64 {
        self.raw.discount
    }
    pub fn initial_dist(&self) -> &[f64] {
        &self.raw.initial_dist
    }
    pub fn action_range(&self) -> (f64, f64) {
        (self.raw.action_bins[0], *self.raw.action_bins.last().unwrap())
    }

    pub fn reward(&self, s: usize, action: f64) -> f64 {
        self.raw.reward_intercept[s] + self.raw.reward_slope[s] * action
    }

    /// Interpolated next-state distribution for `action` in state `s`.
    pub fn transition_row(&self, s: usize, action: f64) -> Vec<f64> {
        let bins = &self.raw.action_bins;
        let rows = &self.raw.transition[s];
        let (lo, hi) = self.action_range();
        let a = action.clamp(lo, hi);
        if bins.len() == 1 || a <= lo {
            return rows[0].clone();
        }
        if a >= hi {
            return rows[bins.len() - 1].clone();
        }
        let j = bins.partition_point(|b| *b <= a) - 1;
        let lambda = (a - bins[j]) / (bins[j + 1] - bins[j]);
        rows[j]
            .iter()
            .zip(&rows[j + 1])
            .map(|(p, q)| (1.0 - lambda) * p + lambda * q)
            .collect()
    }

    pub fn check_policy(&self, policy: &Policy) -> Result<()> {
        if policy.is_discrete() || policy.num_states() != self.num_states() {
            return Err(OpeError::shape(format!(
                "continuous-action MDP `{}` needs a Gaussian policy over {} states",
                self.raw.id,
                self.num_states()
            )));
        }
        Ok(())
    }
}

// ── Environment / trajectories ──────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Environment {
    Tabular(TabularMdp),
    Continuous(ContinuousActionMdp),
}

impl From<TabularMdp> for Environment {
    fn from(m: TabularMdp) -> Self {
        Environment::Tabular(m)
    }
}

impl From<ContinuousActionMdp> for Environment {
    fn from(m: ContinuousActionMdp) -> Self {
        Environment::Continuous(m)
    }
}

impl Environment {
    pub fn id(&self) -> &str {
        match self {
            Environment::Tabular(m) => m.id(),
            Environment::Continuous(m) => m.id(),
        }
    }
    pub fn horizon(&self) -> usize {
        match self {
            Environment::Tabular(m) => m.horizon(),
            Environment::Continuous(m) => m.horizon(),
        }
    }
    pub fn discount(&self) -> f64 {
        match self {
            Environment::Tabular(m) => m.discount(),
            Environment::Continuous(m) => m.discount(),
        }
    }
    pub fn num_states(&self) -> usize {
        match self {
            Environment::Tabular(m) => m.num_states(),
            Environment::Continuous(m) => m.num_states(),
        }
    }
    /// `Some(|A|)` for discrete action spaces.
    pub fn num_actions(&self) -> Option<usize> {
        match self {
            Environment::Tabular(m) => Some(m.num_actions()),
            Environment::Continuous(_) => None,
        }
    }
    pub fn as_tabular(&self) -> Option<&TabularMdp> {
        match self {
            Environment::Tabular(m) => Some(m),
            Environment::Continuous(_) => None,
        }
    }
    pub fn check_policy(&self, policy: &Policy) -> Result<()> {
        match self {
            Environment::Tabular(m) => m.check_policy(policy),
            Environment::Continuous(m) => m.check_policy(policy),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Action {
    Discrete(usize),
    Continuous(f64),
}

impl Action {
    pub fn index(self) -> Option<usize> {
        match self {
            Action::Discrete(a) => Some(a),
            Action::Continuous(_) => None,
        }
    }
    pub fn value(self) -> Option<f64> {
        match self {
            Action::Discrete(_) => None,
            Action::Continuous(a) => Some(a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub state: usize,
    pub action: Action,
    pub reward: f64,
    pub next_state: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub seed_tag: String,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn initial_state(&self) -> usize {
        self.steps[0].state
    }

    pub fn discounted_return(&self, discount: f64) -> f64 {
        let mut total = 0.0;
        let mut g = 1.0;
        for step in &self.steps {
            total += g * step.reward;
            g *= discount;
        }
        total
    }
}

pub(crate) fn sample_categorical<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

fn noisy<R: Rng>(rng: &mut R, mean: f64, std: f64) -> f64 {
    if std == 0.0 {
        mean
    } else {
        let z: f64 = StandardNormal.sample(rng);
        mean + std * z
    }
}

/// Rolls out one `T`-step episode. The result is a pure function of
/// `(env, policy, stream)`.
pub fn sample_trajectory(env: &Environment, policy: &Policy, stream: &RngStream) -> Result<Trajectory> {
    env.check_policy(policy)?;
    let mut rng = stream.rng();
    let mut steps = Vec::with_capacity(env.horizon());
    match env {
        Environment::Tabular(m) => {
            let mut s = sample_categorical(&mut rng, m.initial_dist());
            for _ in 0..m.horizon() {
                let a = sample_categorical(&mut rng, policy.action_probs(s));
                let reward = noisy(&mut rng, m.reward(s, a), m.reward_noise_std(s, a));
                let next = sample_categorical(&mut rng, m.transition_row(s, a));
                steps.push(Step {
                    state: s,
                    action: Action::Discrete(a),
                    reward,
                    next_state: next,
                });
                s = next;
            }
        }
        Environment::Continuous(m) => {
            let mut s = sample_categorical(&mut rng, m.initial_dist());
            for _ in 0..m.horizon() {
                let (mu, sigma) = policy.gaussian_params(s).expect("checked above");
                let z: f64 = StandardNormal.sample(&mut rng);
                let a = mu + sigma * z;
                let reward = noisy(&mut rng, m.reward(s, a), m.raw.reward_noise_std[s]);
                let next = sample_categorical(&mut rng, &m.transition_row(s, a));
                steps.push(Step {
                    state: s,
                    action: Action::Continuous(a),
                    reward,
                    next_state: next,
                });
                s = next;
            }
        }
    }
    Ok(Trajectory {
        steps,
        seed_tag: stream.tag(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_state(reward: f64, horizon: usize) -> TabularMdp {
        TabularMdp::new(
            "single",
            horizon,
            1.0,
            vec![1.0],
            vec![vec![vec![1.0]]],
            vec![vec![reward]],
            None,
        )
        .unwrap()
    }

    /// s0 -> s1 under action 0, s1 absorbing; action 1 stays put.
    fn chain() -> TabularMdp {
        TabularMdp::new(
            "chain",
            4,
            0.9,
            vec![1.0, 0.0],
            vec![
                vec![vec![0.0, 1.0], vec![1.0, 0.0]],
                vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            ],
            vec![vec![0.0, 0.0], vec![2.0, 1.0]],
            None,
        )
        .unwrap()
    }

    #[test]
    fn degenerate_single_state_rewards() {
        let env = Environment::from(single_state(1.0, 3));
        let pi = Policy::uniform(1, 1).unwrap();
        let traj = sample_trajectory(&env, &pi, &RngStream::new(0, "t")).unwrap();
        let rewards: Vec<f64> = traj.steps.iter().map(|s| s.reward).collect();
        assert_eq!(rewards, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn same_stream_same_trajectory() {
        let m = chain();
        let env = Environment::from(m);
        let pi = Policy::uniform(2, 2).unwrap();
        let stream = RngStream::new(11, "t").at(5);
        assert_eq!(
            sample_trajectory(&env, &pi, &stream).unwrap(),
            sample_trajectory(&env, &pi, &stream).unwrap()
        );
    }

    #[test]
    fn deterministic_chain_follows_greedy_path() {
        let env = Environment::from(chain());
        let greedy = Policy::deterministic(&[0, 0], 2).unwrap();
        let traj = sample_trajectory(&env, &greedy, &RngStream::new(3, "t")).unwrap();
        let states: Vec<usize> = traj.steps.iter().map(|s| s.state).collect();
        assert_eq!(states, vec![0, 1, 1, 1]);
        let rewards: Vec<f64> = traj.steps.iter().map(|s| s.reward).collect();
        assert_eq!(rewards, vec![0.0, 2.0, 2.0, 2.0]);
        for w in traj.steps.windows(2) {
            assert_eq!(w[0].next_state, w[1].state);
        }
    }

    #[test]
    fn incompatible_policy_is_a_shape_error() {
        let env = Environment::from(chain());
        let pi = Policy::uniform(2, 3).unwrap();
        assert!(matches!(
            sample_trajectory(&env, &pi, &RngStream::new(0, "t")),
            Err(OpeError::Shape(_))
        ));
    }

    #[test]
    fn invalid_mdps_are_rejected() {
        assert!(TabularMdp::new("x", 0, 1.0, vec![1.0], vec![vec![vec![1.0]]], vec![vec![0.0]], None).is_err());
        assert!(TabularMdp::new("x", 1, 0.0, vec![1.0], vec![vec![vec![1.0]]], vec![vec![0.0]], None).is_err());
        assert!(TabularMdp::new("x", 1, 1.0, vec![0.9], vec![vec![vec![1.0]]], vec![vec![0.0]], None).is_err());
        assert!(TabularMdp::new("x", 1, 1.0, vec![1.0], vec![vec![vec![0.5]]], vec![vec![0.0]], None).is_err());
    }

    #[test]
    fn tabular_json_round_trip() {
        let m = chain();
        let env = Environment::from(m.clone());
        let text = serde_json::to_string(&env).unwrap();
        let back: Environment = serde_json::from_str(&text).unwrap();
        assert_eq!(back, env);
        let bare: TabularMdp = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(bare, m);
    }

    #[test]
    fn continuous_interpolation_rows_are_distributions() {
        let m = ContinuousActionMdp::new(RawContinuousMdp {
            id: "c".into(),
            horizon: 3,
            discount: 1.0,
            initial_dist: vec![1.0, 0.0],
            action_bins: vec![-1.0, 0.0, 1.0],
            transition: vec![
                vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]],
                vec![vec![0.2, 0.8], vec![0.6, 0.4], vec![1.0, 0.0]],
            ],
            reward_intercept: vec![0.0, 1.0],
            reward_slope: vec![1.0, -0.5],
            reward_noise_std: vec![],
        })
        .unwrap();
        let row = m.transition_row(0, 0.5);
        assert!((row[0] - 0.25).abs() < 1e-12 && (row[1] - 0.75).abs() < 1e-12);
        assert_eq!(m.transition_row(1, -7.0), vec![0.2, 0.8]);
        let env = Environment::from(m);
        let pi = Policy::gaussian(vec![0.0, 0.5], vec![1.0, 0.3]).unwrap();
        let traj = sample_trajectory(&env, &pi, &RngStream::new(1, "c")).unwrap();
        assert_eq!(traj.len(), 3);
        assert!(traj.steps.iter().all(|s| s.action.value().is_some()));
    }
}
