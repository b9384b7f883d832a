//! Replay buffer and hindsight goal selection.
//!
//! Relabeling happens when an episode is stored: every original transition
//! is kept, and each strategy materializes its virtual-goal copies next to it.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::GoalEnv;
use crate::error::{Error, Result};
use crate::mdp::{binary_reward, Episode, Goal, Transition};

/// Where virtual goals come from.
/// Ordered as listed, which is also the row order of summaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    #[serde(rename = "none")]
    NoRelabel,
    /// The episode's final achieved goal.
    Final,
    /// Achieved goals strictly after the transition.
    Future,
    /// Achieved goals anywhere in the episode.
    Episode,
    /// Achieved goals of transitions already in the buffer.
    Random,
    /// The transition's own next achieved goal, then `k - 1` future draws.
    NextFuture,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::NoRelabel,
        StrategyKind::Final,
        StrategyKind::Future,
        StrategyKind::Episode,
        StrategyKind::Random,
        StrategyKind::NextFuture,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::NoRelabel => "none",
            StrategyKind::Final => "final",
            StrategyKind::Future => "future",
            StrategyKind::Episode => "episode",
            StrategyKind::Random => "random",
            StrategyKind::NextFuture => "next_future",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown replay strategy `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ReplayStrategy {
    pub kind: StrategyKind,
    pub k: usize,
}

impl ReplayStrategy {
    pub const DEFAULT_K: usize = 4;

    pub fn new(kind: StrategyKind, k: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        Ok(Self { kind, k })
    }

    /// Relabeled copies stored per original transition.
    pub fn copies_per_transition(&self) -> usize {
        match self.kind {
            StrategyKind::NoRelabel => 0,
            StrategyKind::Final => 1,
            _ => self.k,
        }
    }
}

/// FIFO transition store with a fixed capacity.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    storage: VecDeque<Transition>,
    insertion_count: u64,
}

impl ReplayBuffer {
    pub const DEFAULT_CAPACITY: usize = 1_000_000;

    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument("buffer capacity must be >= 1".into()));
        }
        Ok(Self {
            capacity,
            storage: VecDeque::with_capacity(capacity.min(1 << 16)),
            insertion_count: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn insertion_count(&self) -> u64 {
        self.insertion_count
    }

    pub fn push(&mut self, tr: Transition) {
        if self.storage.len() == self.capacity {
            self.storage.pop_front();
        }
        self.storage.push_back(tr);
        self.insertion_count += 1;
    }

    pub fn get(&self, index: usize) -> Option<&Transition> {
        self.storage.get(index)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.storage.iter()
    }

    /// Uniform draw with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<&Transition> {
        if self.storage.is_empty() {
            return Err(Error::InvalidState("cannot sample from an empty buffer".into()));
        }
        Ok(&self.storage[rng.gen_range(0..self.storage.len())])
    }
}

/// Picks the virtual goals for transition `t` of `episode`.
///
/// Future-style draws take `j` uniformly from `t+1..=T` with replacement, so
/// the last transition (`t = T-1`) always relabels with `s_T`.
pub fn select_virtual_goals<E: GoalEnv, R: Rng + ?Sized>(
    strategy: ReplayStrategy,
    episode: &Episode,
    t: usize,
    env: &E,
    rng: &mut R,
    buffer: &ReplayBuffer,
) -> Result<Vec<Goal>> {
    let len = episode.len();
    if t >= len {
        return Err(Error::InvalidArgument(format!(
            "step {t} outside episode of length {len}"
        )));
    }
    let achieved = |j: usize| env.achieved_goal(episode.state_at(j));
    let k = strategy.k;
    let goals = match strategy.kind {
        StrategyKind::NoRelabel => Vec::new(),
        StrategyKind::Final => vec![achieved(len)],
        StrategyKind::Future => (0..k).map(|_| achieved(rng.gen_range(t + 1..=len))).collect(),
        StrategyKind::Episode => (0..k).map(|_| achieved(rng.gen_range(1..=len))).collect(),
        StrategyKind::Random => {
            let mut goals = Vec::with_capacity(k);
            for _ in 0..k {
                goals.push(env.achieved_goal(buffer.sample(rng)?.next_state));
            }
            goals
        }
        StrategyKind::NextFuture => {
            let mut goals = Vec::with_capacity(k);
            goals.push(achieved(t + 1));
            goals.extend((1..k).map(|_| achieved(rng.gen_range(t + 1..=len))));
            goals
        }
    };
    Ok(goals)
}

/// Copy of `tr` aimed at `goal`, with reward, success and done recomputed.
pub fn relabel_transition<E: GoalEnv>(
    tr: &Transition,
    goal: Goal,
    env: &E,
    eps_r: f64,
) -> Result<Transition> {
    let d = env.distance(env.achieved_goal(tr.next_state), goal)?;
    let reward = binary_reward(d, eps_r)?;
    let success = reward == 0.0;
    Ok(Transition {
        goal,
        reward,
        success,
        done: success,
        ..*tr
    })
}

/// Stores the episode's originals, then their relabeled copies.
/// Returns the number of transitions pushed.
pub fn store_episode<E: GoalEnv, R: Rng + ?Sized>(
    buffer: &mut ReplayBuffer,
    episode: &Episode,
    strategy: ReplayStrategy,
    env: &E,
    eps_r: f64,
    rng: &mut R,
) -> Result<usize> {
    for tr in &episode.transitions {
        buffer.push(*tr);
    }
    let mut stored = episode.len();
    for (t, tr) in episode.transitions.iter().enumerate() {
        for goal in select_virtual_goals(strategy, episode, t, env, rng, buffer)? {
            buffer.push(relabel_transition(tr, goal, env, eps_r)?);
            stored += 1;
        }
    }
    Ok(stored)
}

pub fn sample_minibatch<R: Rng + ?Sized>(
    buffer: &ReplayBuffer,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<Transition>> {
    (0..batch_size)
        .map(|_| buffer.sample(rng).copied())
        .collect()
}
