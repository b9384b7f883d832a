//! Tabular truncated quantile critics.
//!
//! Every `(state, goal, action)` entry holds `n_critics` rows of `m_atoms`
//! quantile estimates. The value of an entry is the mean of the pooled atoms
//! after discarding the largest `round(tau_trunc * n_critics * m_atoms)`.

use serde::{Deserialize, Serialize};

use crate::agents::store::RowStore;
use crate::env::GoalEnv;
use crate::error::{Error, Result};
use crate::mdp::{Action, Transition};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TqcParams {
    #[serde(default = "TqcParams::default_n_critics")]
    pub n_critics: usize,
    #[serde(default = "TqcParams::default_m_atoms")]
    pub m_atoms: usize,
    #[serde(default = "TqcParams::default_tau_trunc")]
    pub tau_trunc: f64,
    /// Width of the quadratic region of the Huber loss.
    #[serde(default = "TqcParams::default_kappa")]
    pub kappa: f64,
    #[serde(default = "TqcParams::default_alpha")]
    pub alpha: f64,
}

impl TqcParams {
    fn default_n_critics() -> usize {
        2
    }
    fn default_m_atoms() -> usize {
        8
    }
    fn default_tau_trunc() -> f64 {
        0.2
    }
    fn default_kappa() -> f64 {
        1.0
    }
    fn default_alpha() -> f64 {
        0.1
    }

    pub fn atoms_per_action(&self) -> usize {
        self.n_critics * self.m_atoms
    }

    pub fn drop_count(&self) -> usize {
        drop_count(self.atoms_per_action(), self.tau_trunc)
    }

    pub fn validate(&self) -> Result<()> {
        let field_err = |field: &str, msg: String| Err(Error::config(field, msg));
        if self.n_critics < 1 {
            return field_err("agent.n_critics", "must be >= 1".into());
        }
        if self.m_atoms < 1 {
            return field_err("agent.m_atoms", "must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.tau_trunc) {
            return field_err("agent.tau_trunc", format!("{} not in [0, 1)", self.tau_trunc));
        }
        if self.drop_count() >= self.atoms_per_action() {
            return field_err(
                "agent.tau_trunc",
                format!("drops all {} atoms", self.atoms_per_action()),
            );
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return field_err("agent.kappa", format!("{} must be > 0", self.kappa));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return field_err("agent.alpha", format!("{} not in (0, 1]", self.alpha));
        }
        Ok(())
    }
}

impl Default for TqcParams {
    fn default() -> Self {
        Self {
            n_critics: Self::default_n_critics(),
            m_atoms: Self::default_m_atoms(),
            tau_trunc: Self::default_tau_trunc(),
            kappa: Self::default_kappa(),
            alpha: Self::default_alpha(),
        }
    }
}

/// `round(tau * total)`, halves away from zero.
pub fn drop_count(total: usize, tau_trunc: f64) -> usize {
    (tau_trunc * total as f64).round() as usize
}

/// Quantile fractions `(2m - 1) / (2M)` for `m = 1..=M`.
pub fn quantile_midpoints(m_atoms: usize) -> Result<Vec<f64>> {
    if m_atoms < 1 {
        return Err(Error::InvalidArgument("need at least one atom".into()));
    }
    let denom = 2.0 * m_atoms as f64;
    Ok((1..=m_atoms).map(|m| (2 * m - 1) as f64 / denom).collect())
}

/// Sorts the pooled atoms and removes the largest `round(tau * len)`.
pub fn truncated_atoms(atoms: &[f64], tau_trunc: f64) -> Result<Vec<f64>> {
    if atoms.is_empty() {
        return Err(Error::InvalidArgument("no atoms to truncate".into()));
    }
    if !(0.0..1.0).contains(&tau_trunc) {
        return Err(Error::InvalidArgument(format!(
            "truncation fraction {tau_trunc} not in [0, 1)"
        )));
    }
    let drop = drop_count(atoms.len(), tau_trunc);
    if drop >= atoms.len() {
        return Err(Error::InvalidArgument(format!(
            "truncation would drop all {} atoms",
            atoms.len()
        )));
    }
    let mut kept = atoms.to_vec();
    kept.sort_by(f64::total_cmp);
    kept.truncate(atoms.len() - drop);
    Ok(kept)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `r + gamma * (1 - done) * z` for every kept next-state atom.
pub fn td_target_atoms(reward: f64, done: bool, gamma: f64, next_atoms: &[f64]) -> Vec<f64> {
    let scale = if done { 0.0 } else { gamma };
    next_atoms.iter().map(|&z| reward + scale * z).collect()
}

fn huber(u: f64, kappa: f64) -> (f64, f64) {
    if u.abs() <= kappa {
        (0.5 * u * u, u)
    } else {
        (kappa * (u.abs() - 0.5 * kappa), kappa * u.signum())
    }
}

/// Quantile Huber loss of a single atom `z` at fraction `tau_hat` against the
/// target sample `targets`, averaged over targets. Returns the loss and its
/// derivative with respect to `z`.
pub fn quantile_huber_loss(z: f64, targets: &[f64], tau_hat: f64, kappa: f64) -> (f64, f64) {
    let mut loss = 0.0;
    let mut grad = 0.0;
    for &y in targets {
        let u = y - z;
        let weight = (tau_hat - if u < 0.0 { 1.0 } else { 0.0 }).abs();
        let (h, dh) = huber(u, kappa);
        loss += weight * h;
        grad -= weight * dh;
    }
    let n = targets.len() as f64;
    (loss / n, grad / n)
}

/// Quantile atoms, laid out per entry as `[action][critic][atom]`.
#[derive(Clone, Debug)]
pub struct QuantileTable {
    action_count: usize,
    params: TqcParams,
    taus: Vec<f64>,
    rows: RowStore,
}

impl QuantileTable {
    pub fn new(action_count: usize, params: TqcParams) -> Result<Self> {
        Self::with_bounds(action_count, params, None)
    }

    /// Table over a key space bounded as in [`GoalEnv::key_bounds`].
    pub fn with_bounds(
        action_count: usize,
        params: TqcParams,
        bounds: Option<(u64, u64)>,
    ) -> Result<Self> {
        params.validate()?;
        let width = action_count * params.atoms_per_action();
        Ok(Self {
            action_count,
            params,
            taus: quantile_midpoints(params.m_atoms)?,
            rows: RowStore::new(width, bounds),
        })
    }

    pub fn params(&self) -> &TqcParams {
        &self.params
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    /// Pooled `n_critics * m_atoms` atoms of one action.
    pub fn atoms(&self, key: (u64, u64), action: Action) -> &[f64] {
        let width = self.params.atoms_per_action();
        &self.rows.row(key)[action.0 * width..(action.0 + 1) * width]
    }

    pub fn set_atoms(&mut self, key: (u64, u64), action: Action, atoms: &[f64]) {
        let width = self.params.atoms_per_action();
        assert_eq!(atoms.len(), width, "atom count mismatch");
        self.rows.row_mut(key)[action.0 * width..(action.0 + 1) * width].copy_from_slice(atoms);
    }

    /// Mean of the truncated pooled atoms; zero for unvisited entries.
    pub fn tq_value(&self, key: (u64, u64), action: Action) -> f64 {
        let atoms = self.atoms(key, action);
        // tau_trunc is validated, so truncation cannot fail here
        mean(&truncated_atoms(atoms, self.params.tau_trunc).expect("validated params"))
    }

    pub fn action_values(&self, key: (u64, u64)) -> Vec<f64> {
        (0..self.action_count)
            .map(|a| self.tq_value(key, Action(a)))
            .collect()
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

    pub fn value_range(&self) -> Option<(f64, f64)> {
        self.rows.value_range()
    }

    /// One subgradient step of every atom of `key, action` towards `targets`,
    /// after which each critic row is re-sorted.
    pub fn regress(&mut self, key: (u64, u64), action: Action, targets: &[f64]) {
        let m = self.params.m_atoms;
        let (alpha, kappa) = (self.params.alpha, self.params.kappa);
        let mut atoms = self.atoms(key, action).to_vec();
        for critic in atoms.chunks_mut(m) {
            for (z, &tau) in critic.iter_mut().zip(&self.taus) {
                let (_, grad) = quantile_huber_loss(*z, targets, tau, kappa);
                *z -= alpha * grad;
            }
            critic.sort_by(f64::total_cmp);
        }
        self.set_atoms(key, action, &atoms);
    }
}

/// Greedy next action under the truncated mixture, lowest index on ties.
fn greedy_by_tq(table: &QuantileTable, key: (u64, u64)) -> Action {
    let mut best = Action(0);
    let mut best_value = f64::NEG_INFINITY;
    for a in 0..table.action_count {
        let v = table.tq_value(key, Action(a));
        if v > best_value {
            best_value = v;
            best = Action(a);
        }
    }
    best
}

/// Distributional backup for one transition. Returns the updated atoms.
pub fn tqc_update<E: GoalEnv>(
    table: &mut QuantileTable,
    env: &E,
    tr: &Transition,
    gamma: f64,
) -> Result<Vec<f64>> {
    if tr.action.0 >= table.action_count {
        return Err(Error::InvalidArgument(format!(
            "action {} out of range",
            tr.action.0
        )));
    }
    let kept_len = table.params.atoms_per_action() - table.params.drop_count();
    let targets = if tr.done {
        vec![tr.reward; kept_len]
    } else {
        let next_key = env.value_key(tr.next_state, tr.goal);
        let next_action = greedy_by_tq(table, next_key);
        let kept = truncated_atoms(table.atoms(next_key, next_action), table.params.tau_trunc)?;
        td_target_atoms(tr.reward, tr.done, gamma, &kept)
    };
    let key = env.value_key(tr.state, tr.goal);
    table.regress(key, tr.action, &targets);
    Ok(table.atoms(key, tr.action).to_vec())
}
