//! Logged datasets: generation under a behavior policy and a line-delimited
//! JSON file format.
//!
//! File layout: one header line followed by exactly `n` trajectory lines.
//!
//! ```text
//! {"format":"ope-bench-dataset","version":1,"mdp_id":..,"behavior_policy_id":..,"n":..,"horizon":..,"discount":..,"num_states":..,"action_space":..,"seed":..,"checksum":"<sha256 of the record lines>"}
//! {"index":0,"seed_tag":"dataset:7:0","steps":[{"s":0,"a":1,"r":0.5,"s_next":2,"p":0.25},..]}
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{OpeError, Result};
use crate::mdp::{sample_trajectory, Action, Environment, NamedPolicy, Policy, Step, Trajectory};
use crate::rng::RngStream;

pub const DATASET_FORMAT: &str = "ope-bench-dataset";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionSpace {
    Discrete { num_actions: usize },
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoggedDataset {
    pub mdp_id: String,
    pub behavior_policy_id: String,
    pub seed: u64,
    pub horizon: usize,
    pub discount: f64,
    pub num_states: usize,
    pub action_space: ActionSpace,
    pub trajectories: Vec<Trajectory>,
    /// `behavior_probs[i][t] = π_b(a_t|s_t)` for trajectory `i`, recorded at
    /// generation time (a density for continuous actions).
    pub behavior_probs: Vec<Vec<f64>>,
}

impl LoggedDataset {
    pub fn id(&self) -> String {
        format!("{}/{}/seed={}", self.mdp_id, self.behavior_policy_id, self.seed)
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn num_actions(&self) -> Option<usize> {
        match self.action_space {
            ActionSpace::Discrete { num_actions } => Some(num_actions),
            ActionSpace::Continuous => None,
        }
    }

    /// Average discounted return of the logged trajectories.
    pub fn mean_discounted_return(&self) -> f64 {
        let total: f64 = self
            .trajectories
            .iter()
            .map(|t| t.discounted_return(self.discount))
            .sum();
        total / self.len() as f64
    }

    /// Checks that `policy` can be evaluated against this dataset.
    pub fn check_policy(&self, policy: &Policy) -> Result<()> {
        if policy.num_states() != self.num_states || policy.num_actions() != self.num_actions() {
            return Err(OpeError::shape(format!(
                "policy ({} states, {:?} actions) incompatible with dataset ({} states, {:?} actions)",
                policy.num_states(),
                policy.num_actions(),
                self.num_states,
                self.num_actions()
            )));
        }
        Ok(())
    }
}

fn propensity(policy: &Policy, step: &Step) -> f64 {
    match step.action {
        Action::Discrete(a) => policy.prob(step.state, a),
        Action::Continuous(a) => policy.density(step.state, a).unwrap_or(0.0),
    }
}

/// Draws `n` trajectories under `behavior`; trajectory `i` uses stream
/// `stream.at(i)`, so the result does not depend on thread count.
pub fn generate_logged_dataset(
    env: &Environment,
    behavior: &NamedPolicy,
    n: usize,
    stream: &RngStream,
) -> Result<LoggedDataset> {
    if n == 0 {
        return Err(OpeError::param("dataset needs at least one trajectory"));
    }
    env.check_policy(&behavior.policy)?;
    if let Some(n_a) = env.num_actions() {
        let gaps = (0..env.num_states())
            .flat_map(|s| (0..n_a).map(move |a| (s, a)))
            .filter(|&(s, a)| behavior.policy.prob(s, a) == 0.0)
            .count();
        if gaps > 0 {
            log::warn!(
                "behavior policy `{}` has {gaps} zero-probability state-action pairs; \
                 importance weights for candidates using them will be undefined",
                behavior.id
            );
        }
    }

    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let traj = sample_trajectory(env, &behavior.policy, &stream.at(i as u64))?;
            let probs: Vec<f64> = traj.steps.iter().map(|s| propensity(&behavior.policy, s)).collect();
            if let Some(t) = probs.iter().position(|p| !(*p > 0.0)) {
                return Err(OpeError::param(format!(
                    "trajectory {i} step {t}: logged propensity is zero"
                )));
            }
            Ok((traj, probs))
        })
        .collect::<Result<Vec<_>>>()?;
    let (trajectories, behavior_probs) = rows.into_iter().unzip();

    Ok(LoggedDataset {
        mdp_id: env.id().to_string(),
        behavior_policy_id: behavior.id.clone(),
        seed: stream.seed,
        horizon: env.horizon(),
        discount: env.discount(),
        num_states: env.num_states(),
        action_space: match env.num_actions() {
            Some(num_actions) => ActionSpace::Discrete { num_actions },
            None => ActionSpace::Continuous,
        },
        trajectories,
        behavior_probs,
    })
}

// ── File format ─────────────────────────────────────────────────────────

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    mdp_id: String,
    behavior_policy_id: String,
    n: usize,
    horizon: usize,
    discount: f64,
    num_states: usize,
    action_space: ActionSpace,
    seed: u64,
    checksum: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordStep {
    s: usize,
    a: Action,
    r: f64,
    s_next: usize,
    p: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    index: usize,
    seed_tag: String,
    steps: Vec<RecordStep>,
}

fn encode_records(ds: &LoggedDataset) -> Result<Vec<String>> {
    ds.trajectories
        .iter()
        .zip(&ds.behavior_probs)
        .enumerate()
        .map(|(index, (traj, probs))| {
            let steps = traj
                .steps
                .iter()
                .zip(probs)
                .map(|(st, p)| RecordStep {
                    s: st.state,
                    a: st.action,
                    r: st.reward,
                    s_next: st.next_state,
                    p: *p,
                })
                .collect();
            let rec = Record {
                index,
                seed_tag: traj.seed_tag.clone(),
                steps,
            };
            Ok(serde_json::to_string(&rec)?)
        })
        .collect()
}

fn checksum<'a>(lines: impl IntoIterator<Item = &'a str>) -> String {
    let mut hasher = Sha256::new();
    for line in lines {
        hasher.update(line.as_bytes());
        hasher.update(b"\n");
    }
    hex::encode(hasher.finalize())
}

/// SHA-256 over the dataset's canonical record lines.
pub fn dataset_checksum(ds: &LoggedDataset) -> Result<String> {
    let lines = encode_records(ds)?;
    Ok(checksum(lines.iter().map(String::as_str)))
}

pub fn write_dataset<W: Write>(ds: &LoggedDataset, mut out: W) -> Result<()> {
    let lines = encode_records(ds)?;
    let header = Header {
        format: DATASET_FORMAT.to_string(),
        version: DATASET_VERSION,
        mdp_id: ds.mdp_id.clone(),
        behavior_policy_id: ds.behavior_policy_id.clone(),
        n: ds.len(),
        horizon: ds.horizon,
        discount: ds.discount,
        num_states: ds.num_states,
        action_space: ds.action_space,
        seed: ds.seed,
        checksum: checksum(lines.iter().map(String::as_str)),
    };
    writeln!(out, "{}", serde_json::to_string(&header)?)?;
    for line in &lines {
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_dataset(ds: &LoggedDataset, path: impl AsRef<Path>) -> Result<()> {
    write_dataset(ds, BufWriter::new(File::create(path)?))
}

pub fn read_dataset<R: BufRead>(input: R) -> Result<LoggedDataset> {
    let mut lines = input.lines();
    let header_line = lines.next().transpose()?.ok_or(OpeError::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let value: serde_json::Value = serde_json::from_str(&header_line).map_err(|e| OpeError::Parse {
        line: 1,
        message: format!("header: {e}"),
    })?;
    if value.get("format").and_then(|v| v.as_str()) != Some(DATASET_FORMAT) {
        return Err(OpeError::Parse {
            line: 1,
            message: format!("not an {DATASET_FORMAT} file"),
        });
    }
    if let Some(found) = value.get("version").and_then(|v| v.as_u64()) {
        if found != DATASET_VERSION as u64 {
            return Err(OpeError::Version {
                found: found as u32,
                expected: DATASET_VERSION,
            });
        }
    }
    let header: Header = serde_json::from_value(value).map_err(|e| OpeError::Parse {
        line: 1,
        message: format!("header: {e}"),
    })?;

    let mut raw_lines = Vec::with_capacity(header.n);
    let mut trajectories = Vec::with_capacity(header.n);
    let mut behavior_probs = Vec::with_capacity(header.n);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if i >= header.n {
            if line.trim().is_empty() {
                continue;
            }
            return Err(OpeError::Parse {
                line: line_no,
                message: format!("unexpected record beyond declared n={}", header.n),
            });
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| OpeError::Parse {
            line: line_no,
            message: format!("record {i}: {e}"),
        })?;
        let bad = |message: String| OpeError::Parse { line: line_no, message };
        if rec.index != i {
            return Err(bad(format!("record index {} out of order (expected {i})", rec.index)));
        }
        if rec.steps.len() != header.horizon {
            return Err(bad(format!(
                "record {i} has {} steps, expected {}",
                rec.steps.len(),
                header.horizon
            )));
        }
        let mut steps = Vec::with_capacity(rec.steps.len());
        let mut probs = Vec::with_capacity(rec.steps.len());
        for (t, st) in rec.steps.iter().enumerate() {
            if st.s >= header.num_states || st.s_next >= header.num_states {
                return Err(bad(format!("record {i} step {t}: state out of range")));
            }
            match (st.a, header.action_space) {
                (Action::Discrete(a), ActionSpace::Discrete { num_actions }) if a < num_actions => {}
                (Action::Continuous(_), ActionSpace::Continuous) => {}
                _ => {
                    return Err(bad(format!(
                        "record {i} step {t}: action does not match the action space"
                    )))
                }
            }
            if !(st.p > 0.0) || !st.p.is_finite() {
                return Err(bad(format!("record {i} step {t}: propensity must be positive")));
            }
            if t > 0 && rec.steps[t - 1].s_next != st.s {
                return Err(bad(format!(
                    "record {i} step {t}: state does not continue from step {}",
                    t - 1
                )));
            }
            steps.push(Step {
                state: st.s,
                action: st.a,
                reward: st.r,
                next_state: st.s_next,
            });
            probs.push(st.p);
        }
        trajectories.push(Trajectory {
            steps,
            seed_tag: rec.seed_tag,
        });
        behavior_probs.push(probs);
        raw_lines.push(line);
    }
    if trajectories.len() != header.n {
        return Err(OpeError::Parse {
            line: trajectories.len() + 2,
            message: format!(
                "truncated: found {} records, header declares {}",
                trajectories.len(),
                header.n
            ),
        });
    }
    let actual = checksum(raw_lines.iter().map(String::as_str));
    if actual != header.checksum {
        return Err(OpeError::Checksum {
            expected: header.checksum,
            actual,
        });
    }
    if header.n == 0 {
        return Err(OpeError::Parse {
            line: 1,
            message: "dataset declares zero trajectories".into(),
        });
    }

    Ok(LoggedDataset {
        mdp_id: header.mdp_id,
        behavior_policy_id: header.behavior_policy_id,
        seed: header.seed,
        horizon: header.horizon,
        discount: header.discount,
        num_states: header.num_states,
        action_space: header.action_space,
        trajectories,
        behavior_probs,
    })
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<LoggedDataset> {
    read_dataset(BufReader::new(File::open(path)?))
}
