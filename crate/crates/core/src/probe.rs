//! Read-only inspection of a learned value surface for one fixed goal.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::Agent;
use crate::env::GoalEnv;
use crate::error::{Error, Result};
use crate::mdp::{Goal, State};

/// `probe` section of an experiment config, in environment coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub goal: Vec<i64>,
    pub states: Vec<Vec<i64>>,
    /// Defaults to a tenth of the training budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<u64>,
}

impl ProbeConfig {
    pub fn resolve<E: GoalEnv>(&self, env: &E, total_env_steps: u64) -> Result<ProbeSpec> {
        let goal = env
            .goal_from_coords(&self.goal)
            .map_err(|e| Error::config("probe.goal", e.to_string()))?;
        if self.states.is_empty() {
            return Err(Error::config("probe.states", "at least one probe state is required"));
        }
        let states = self
            .states
            .iter()
            .enumerate()
            .map(|(i, coords)| {
                env.state_from_coords(coords)
                    .map_err(|e| Error::config(format!("probe.states[{i}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let snapshot_every = self.snapshot_every.unwrap_or((total_env_steps / 10).max(1));
        if snapshot_every < 1 {
            return Err(Error::config("probe.snapshot_every", "must be >= 1"));
        }
        Ok(ProbeSpec {
            goal,
            states,
            snapshot_every,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeSpec {
    pub goal: Goal,
    pub states: Vec<State>,
    pub snapshot_every: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeSnapshot {
    pub env_step: u64,
    /// `(state, max_a value(state, goal, a))` in probe order.
    pub values: Vec<(State, f64)>,
}

/// Greedy value of every probe state under `spec.goal`.
pub fn probe_q<E: GoalEnv>(agent: &Agent, env: &E, spec: &ProbeSpec, env_step: u64) -> Result<ProbeSnapshot> {
    if !env.is_valid_goal(spec.goal) {
        return Err(Error::InvalidArgument(format!(
            "probe goal {:?} is not in the goal space",
            spec.goal
        )));
    }
    let values = spec
        .states
        .iter()
        .map(|&s| {
            if !env.is_valid_state(s) {
                return Err(Error::InvalidArgument(format!(
                    "probe state {s:?} is not valid for this environment"
                )));
            }
            Ok((s, agent.state_value(env, s, spec.goal)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbeSnapshot { env_step, values })
}

pub const PLANAR_HEADER: &str = "env_step,state_x,state_y,value";
pub const KEYED_HEADER: &str = "env_step,state_key,value";

/// CSV text for the snapshots; planar environments report grid coordinates,
/// others the raw state encoding.
pub fn probe_csv<E: GoalEnv>(snapshots: &[ProbeSnapshot], env: &E) -> String {
    let planar = env.is_planar();
    let mut out = String::from(if planar { PLANAR_HEADER } else { KEYED_HEADER });
    out.push('\n');
    for snap in snapshots {
        for &(state, value) in &snap.values {
            match env.plane_coords(state) {
                Some((x, y)) => {
                    let _ = writeln!(out, "{},{x},{y},{value}", snap.env_step);
                }
                None => {
                    let _ = writeln!(out, "{},{},{value}", snap.env_step, state.0);
                }
            }
        }
    }
    out
}

pub fn emit_probe_csv<E: GoalEnv>(snapshots: &[ProbeSnapshot], env: &E, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, probe_csv(snapshots, env)).map_err(|e| Error::io(path, e))
}

/// One parsed data row: env step, state columns, value.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRow {
    pub env_step: u64,
    pub state: Vec<i64>,
    pub value: f64,
}

pub fn parse_probe_csv(text: &str) -> Result<Vec<ProbeRow>> {
    let mut lines = text.lines();
    let width = match lines.next() {
        Some(PLANAR_HEADER) => 4,
        Some(KEYED_HEADER) => 3,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unexpected probe CSV header {other:?}"
            )))
        }
    };
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let bad = || Error::InvalidArgument(format!("malformed probe CSV row `{line}`"));
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != width {
                return Err(bad());
            }
            Ok(ProbeRow {
                env_step: fields[0].parse().map_err(|_| bad())?,
                state: fields[1..width - 1]
                    .iter()
                    .map(|f| f.parse().map_err(|_| bad()))
                    .collect::<Result<_>>()?,
                value: fields[width - 1].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}
