use crate::agents::store::RowStore;
use crate::env::GoalEnv;
use crate::error::{Error, Result};
use crate::mdp::{Action, Transition};

/// Goal-conditioned action values keyed by the environment's value key.
/// Absent entries read as zero.
#[derive(Clone, Debug)]
pub struct QTable {
    action_count: usize,
    rows: RowStore,
}

impl QTable {
    pub fn new(action_count: usize) -> Self {
        Self::with_bounds(action_count, None)
    }

    /// Table over a key space bounded as in [`GoalEnv::key_bounds`].
    pub fn with_bounds(action_count: usize, bounds: Option<(u64, u64)>) -> Self {
        Self {
            action_count,
            rows: RowStore::new(action_count, bounds),
        }
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn values(&self, key: (u64, u64)) -> &[f64] {
        self.rows.row(key)
    }

    pub fn get(&self, key: (u64, u64), action: Action) -> f64 {
        self.values(key)[action.0]
    }

    pub fn set(&mut self, key: (u64, u64), action: Action, value: f64) {
        self.rows.row_mut(key)[action.0] = value;
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((u64, u64), &[f64])> + '_ {
        self.rows.iter()
    }

    /// Smallest and largest stored value.
    pub fn value_range(&self) -> Option<(f64, f64)> {
        self.rows.value_range()
    }
}

/// One-step Q-learning backup:
/// `q <- q + alpha * (r + gamma * (1 - done) * max_a' q(s', g, a') - q)`.
pub fn q_update<E: GoalEnv>(
    table: &mut QTable,
    env: &E,
    tr: &Transition,
    alpha: f64,
    gamma: f64,
) -> Result<f64> {
    if tr.action.0 >= table.action_count {
        return Err(Error::InvalidArgument(format!(
            "action {} out of range",
            tr.action.0
        )));
    }
    let bootstrap = if tr.done {
        0.0
    } else {
        let next = table.values(env.value_key(tr.next_state, tr.goal));
        next.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };
    let target = tr.reward + gamma * bootstrap;
    let key = env.value_key(tr.state, tr.goal);
    let q = table.get(key, tr.action);
    let updated = q + alpha * (target - q);
    table.set(key, tr.action, updated);
    Ok(updated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::BitFlipEnv;
    use crate::mdp::{Goal, State};

    fn tr(reward: f64, done: bool) -> Transition {
        Transition {
            state: State(0),
            action: Action(1),
            next_state: State(2),
            goal: Goal(3),
            reward,
            success: done,
            done,
            episode_id: 0,
            step_index: 0,
        }
    }

    #[test]
    fn terminal_success_keeps_zero() {
        let env = BitFlipEnv::new(3).unwrap();
        let mut table = QTable::new(3);
        assert_eq!(q_update(&mut table, &env, &tr(0.0, true), 0.5, 0.9).unwrap(), 0.0);
    }

    #[test]
    fn failure_step_from_zero_table() {
        let env = BitFlipEnv::new(3).unwrap();
        let mut table = QTable::new(3);
        let q = q_update(&mut table, &env, &tr(-1.0, false), 0.5, 0.9).unwrap();
        assert_eq!(q, -0.5);
        assert_eq!(table.get(env.value_key(State(0), Goal(3)), Action(1)), -0.5);
        assert_eq!(table.value_range(), Some((-0.5, 0.0)));
    }

    #[test]
    fn unvisited_reads_zero() {
        let table = QTable::new(4);
        assert_eq!(table.values((9, 9)), &[0.0; 4]);
        assert!(table.value_range().is_none());
    }
}
