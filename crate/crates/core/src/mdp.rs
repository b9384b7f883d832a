//! Multi-goal MDP vocabulary shared by every other module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment state, carried as the environment's integer encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State(pub u64);

/// A point in an environment's goal space, carried as its integer encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Goal(pub u64);

/// Index into an environment's discrete action set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action(pub usize);

/// One environment step annotated with its goal and outcome.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub state: State,
    pub action: Action,
    pub next_state: State,
    pub goal: Goal,
    /// Either -1.0 or 0.0.
    pub reward: f64,
    pub success: bool,
    /// Equal to `success`; time-limit truncation never sets it.
    pub done: bool,
    pub episode_id: u64,
    pub step_index: usize,
}

impl Transition {
    /// Checks the reward/success/done coupling.
    pub fn validate(&self) -> Result<()> {
        if self.reward != 0.0 && self.reward != -1.0 {
            return Err(Error::InvalidTransition(format!(
                "reward {} is not in {{-1, 0}}",
                self.reward
            )));
        }
        if self.success != (self.reward == 0.0) {
            return Err(Error::InvalidTransition(
                "success flag disagrees with reward".into(),
            ));
        }
        if self.done && !self.success {
            return Err(Error::InvalidTransition(
                "done set on an unsuccessful transition".into(),
            ));
        }
        Ok(())
    }
}

/// Ordered transitions collected under one original goal.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub transitions: Vec<Transition>,
    pub original_goal: Goal,
    pub horizon: usize,
}

impl Episode {
    pub fn new(original_goal: Goal, horizon: usize) -> Self {
        Self {
            transitions: Vec::with_capacity(horizon),
            original_goal,
            horizon,
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// `s_j` for `j` in `0..=len`: the start state for `j = 0`, otherwise
    /// the successor recorded by transition `j - 1`.
    pub fn state_at(&self, j: usize) -> State {
        if j == 0 {
            self.transitions[0].state
        } else {
            self.transitions[j - 1].next_state
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.transitions.len() > self.horizon {
            return Err(Error::InvalidTransition(format!(
                "episode length {} exceeds horizon {}",
                self.transitions.len(),
                self.horizon
            )));
        }
        for (i, tr) in self.transitions.iter().enumerate() {
            tr.validate()?;
            if tr.goal != self.original_goal {
                return Err(Error::InvalidTransition(format!(
                    "transition {i} does not carry the original goal"
                )));
            }
            if i > 0 {
                let prev = &self.transitions[i - 1];
                if prev.episode_id != tr.episode_id {
                    return Err(Error::InvalidTransition(format!(
                        "transition {i} has a different episode id"
                    )));
                }
                if prev.next_state != tr.state {
                    return Err(Error::InvalidTransition(format!(
                        "transition {i} does not chain from its predecessor"
                    )));
                }
                if tr.step_index <= prev.step_index {
                    return Err(Error::InvalidTransition(format!(
                        "step index not increasing at transition {i}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Success threshold and discount.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    pub eps_r: f64,
    pub gamma: f64,
}

impl RewardParams {
    pub fn new(eps_r: f64, gamma: f64) -> Result<Self> {
        if !(eps_r > 0.0) || !eps_r.is_finite() {
            return Err(Error::InvalidArgument(format!("eps_R must be > 0, got {eps_r}")));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma must lie in (0, 1), got {gamma}"
            )));
        }
        Ok(Self { eps_r, gamma })
    }

    /// Lowest value any discounted return can reach with rewards in {-1, 0}.
    pub fn value_floor(&self) -> f64 {
        -1.0 / (1.0 - self.gamma)
    }
}

/// Sparse reward: 0 when `distance <= eps_r`, -1 otherwise.
pub fn binary_reward(distance: f64, eps_r: f64) -> Result<f64> {
    if !(distance >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "distance must be non-negative, got {distance}"
        )));
    }
    if !(eps_r > 0.0) {
        return Err(Error::InvalidArgument(format!("eps_R must be > 0, got {eps_r}")));
    }
    Ok(if distance <= eps_r { 0.0 } else { -1.0 })
}

pub fn is_success(distance: f64, eps_r: f64) -> Result<bool> {
    binary_reward(distance, eps_r).map(|r| r == 0.0)
}
