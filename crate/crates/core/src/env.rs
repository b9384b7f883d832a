//! Deterministic discrete multi-goal environments.
//!
//! Each environment is a stateless rule set: states and goals are integer
//! encodings owned by the environment, and all randomness comes in through
//! the generator handed to [`GoalEnv::reset`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Action, Goal, State};

/// Static description of an environment instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvSpec {
    pub name: &'static str,
    pub action_count: usize,
    pub horizon: usize,
    pub default_eps_r: f64,
    pub goal_dims: usize,
}

/// Enumerations larger than this are refused.
pub const MAX_ENUMERATION: u64 = 1 << 22;

pub trait GoalEnv {
    fn spec(&self) -> EnvSpec;

    /// Draws an initial state and a goal.
    fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> (State, Goal);

    fn step(&self, state: State, action: Action) -> Result<State>;

    fn achieved_goal(&self, state: State) -> Goal;

    fn distance(&self, a: Goal, b: Goal) -> Result<f64>;

    fn is_valid_state(&self, state: State) -> bool;

    fn is_valid_goal(&self, goal: Goal) -> bool;

    /// Every valid state, or `None` when the space is too large to list.
    fn all_states(&self) -> Option<Vec<State>>;

    fn all_goals(&self) -> Option<Vec<Goal>>;

    /// Key under which value tables store `(state, goal)`. Environments with
    /// an exact goal symmetry may collapse equivalent pairs.
    fn value_key(&self, state: State, goal: Goal) -> (u64, u64) {
        (state.0, goal.0)
    }

    /// Exclusive upper bounds of the two [`value_key`](Self::value_key)
    /// components, when they are small enough for dense storage.
    fn key_bounds(&self) -> Option<(u64, u64)> {
        None
    }

    /// Parses the coordinate form used in config files.
    fn state_from_coords(&self, coords: &[i64]) -> Result<State>;

    fn goal_from_coords(&self, coords: &[i64]) -> Result<Goal>;

    /// Planar position used when reporting a state on a grid, if any.
    fn plane_coords(&self, state: State) -> Option<(i64, i64)>;

    fn is_planar(&self) -> bool {
        true
    }

    fn check_action(&self, action: Action) -> Result<()> {
        let count = self.spec().action_count;
        if action.0 >= count {
            return Err(Error::InvalidArgument(format!(
                "action {} out of range for {} actions",
                action.0, count
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Bit flipping

/// `n` bits; action `i` flips bit `i`; the goal is a target bit pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct BitFlipEnv {
    n: usize,
    relative_keys: bool,
}

impl BitFlipEnv {
    pub const MIN_BITS: usize = 3;
    pub const MAX_BITS: usize = 30;

    pub fn new(n: usize) -> Result<Self> {
        if !(Self::MIN_BITS..=Self::MAX_BITS).contains(&n) {
            return Err(Error::InvalidArgument(format!(
                "bitflip needs {}..={} bits, got {n}",
                Self::MIN_BITS,
                Self::MAX_BITS
            )));
        }
        Ok(Self {
            n,
            relative_keys: true,
        })
    }

    /// When enabled (the default), value tables are keyed by `state XOR goal`.
    /// Dynamics and reward commute with XOR-ing both by any mask, so the key is
    /// an exact sufficient statistic for the optimal value.
    pub fn with_relative_keys(mut self, relative: bool) -> Self {
        self.relative_keys = relative;
        self
    }

    pub fn bits(&self) -> usize {
        self.n
    }

    fn mask(&self) -> u64 {
        (1u64 << self.n) - 1
    }

    pub fn encode(bits: &[u8]) -> u64 {
        bits.iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | (u64::from(b & 1) << i))
    }

    pub fn decode(&self, value: u64) -> Vec<u8> {
        (0..self.n).map(|i| ((value >> i) & 1) as u8).collect()
    }

    fn bits_from_coords(&self, coords: &[i64]) -> Result<u64> {
        if coords.len() != self.n || coords.iter().any(|&b| b != 0 && b != 1) {
            return Err(Error::InvalidArgument(format!(
                "expected {} bits of 0/1, got {coords:?}",
                self.n
            )));
        }
        Ok(coords
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i)))
    }
}

impl GoalEnv for BitFlipEnv {
    fn spec(&self) -> EnvSpec {
        EnvSpec {
            name: "bitflip",
            action_count: self.n,
            horizon: self.n,
            default_eps_r: 0.5,
            goal_dims: self.n,
        }
    }

    fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> (State, Goal) {
        let state = rng.gen_range(0..=self.mask());
        let goal = rng.gen_range(0..=self.mask());
        (State(state), Goal(goal))
    }

    fn step(&self, state: State, action: Action) -> Result<State> {
        self.check_action(action)?;
        Ok(State(state.0 ^ (1u64 << action.0)))
    }

    fn achieved_goal(&self, state: State) -> Goal {
        Goal(state.0)
    }

    fn distance(&self, a: Goal, b: Goal) -> Result<f64> {
        if !self.is_valid_goal(a) || !self.is_valid_goal(b) {
            return Err(Error::InvalidArgument(format!(
                "goal outside the {}-bit goal space",
                self.n
            )));
        }
        Ok(f64::from((a.0 ^ b.0).count_ones()))
    }

    fn is_valid_state(&self, state: State) -> bool {
        state.0 <= self.mask()
    }

    fn is_valid_goal(&self, goal: Goal) -> bool {
        goal.0 <= self.mask()
    }

    fn all_states(&self) -> Option<Vec<State>> {
        (self.mask() < MAX_ENUMERATION).then(|| (0..=self.mask()).map(State).collect())
    }

    fn all_goals(&self) -> Option<Vec<Goal>> {
        (self.mask() < MAX_ENUMERATION).then(|| (0..=self.mask()).map(Goal).collect())
    }

    fn value_key(&self, state: State, goal: Goal) -> (u64, u64) {
        if self.relative_keys {
            (state.0 ^ goal.0, 0)
        } else {
            (state.0, goal.0)
        }
    }

    fn key_bounds(&self) -> Option<(u64, u64)> {
        let states = self.mask() + 1;
        Some(if self.relative_keys { (states, 1) } else { (states, states) })
    }

    fn state_from_coords(&self, coords: &[i64]) -> Result<State> {
        self.bits_from_coords(coords).map(State)
    }

    fn goal_from_coords(&self, coords: &[i64]) -> Result<Goal> {
        self.bits_from_coords(coords).map(Goal)
    }

    fn plane_coords(&self, _state: State) -> Option<(i64, i64)> {
        None
    }

    fn is_planar(&self) -> bool {
        false
    }
}

// ---------------------------------------------------------------------------
// Grid with a pushable box

/// Movement directions shared by the grid environments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    Up,
    Down,
    Left,
    Right,
}

impl Move {
    pub const ALL: [Move; 4] = [Move::Up, Move::Down, Move::Left, Move::Right];

    pub fn from_action(action: Action) -> Result<Self> {
        Self::ALL.get(action.0).copied().ok_or_else(|| {
            Error::InvalidArgument(format!("action {} out of range for 4 moves", action.0))
        })
    }

    pub fn action(self) -> Action {
        Action(self as usize)
    }

    fn delta(self) -> (i64, i64) {
        match self {
            Move::Up => (0, 1),
            Move::Down => (0, -1),
            Move::Left => (-1, 0),
            Move::Right => (1, 0),
        }
    }
}

/// Cell on a `width x height` grid; `y` grows upward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cell {
    pub x: i64,
    pub y: i64,
}

impl Cell {
    pub fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    fn shifted(self, m: Move) -> Cell {
        let (dx, dy) = m.delta();
        Cell::new(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, other: Cell) -> i64 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Grid {
    width: i64,
    height: i64,
}

impl Grid {
    fn cells(&self) -> u64 {
        (self.width * self.height) as u64
    }

    fn contains(&self, c: Cell) -> bool {
        (0..self.width).contains(&c.x) && (0..self.height).contains(&c.y)
    }

    fn index(&self, c: Cell) -> u64 {
        (c.y * self.width + c.x) as u64
    }

    fn cell(&self, index: u64) -> Cell {
        let i = index as i64;
        Cell::new(i % self.width, i / self.width)
    }

    fn is_border(&self, c: Cell) -> bool {
        c.x == 0 || c.y == 0 || c.x == self.width - 1 || c.y == self.height - 1
    }

    fn cell_from_coords(&self, coords: &[i64]) -> Result<Cell> {
        match coords {
            [x, y] if self.contains(Cell::new(*x, *y)) => Ok(Cell::new(*x, *y)),
            _ => Err(Error::InvalidArgument(format!(
                "cell {coords:?} is not on the {}x{} grid",
                self.width, self.height
            ))),
        }
    }
}

/// Agent and box on a walled grid; the goal is a target cell for the box.
///
/// Walking into the box pushes it one cell if the cell beyond is on the grid;
/// otherwise neither moves. Boxes pushed against a wall simply stop there.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPushEnv {
    grid: Grid,
    horizon: usize,
}

/// Decoded [`GridPushEnv`] state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PushState {
    pub agent: Cell,
    pub boxed: Cell,
}

impl GridPushEnv {
    pub const DEFAULT_HORIZON: usize = 50;

    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width < 4 || height < 4 {
            return Err(Error::InvalidArgument(format!(
                "gridpush needs at least 4x4 cells, got {width}x{height}"
            )));
        }
        if width * height > 4096 {
            return Err(Error::InvalidArgument(format!(
                "gridpush {width}x{height} is too large for tabular learning"
            )));
        }
        Ok(Self {
            grid: Grid {
                width: width as i64,
                height: height as i64,
            },
            horizon: Self::DEFAULT_HORIZON,
        })
    }

    pub fn with_horizon(mut self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be >= 1".into()));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn width(&self) -> i64 {
        self.grid.width
    }

    pub fn height(&self) -> i64 {
        self.grid.height
    }

    pub fn encode(&self, s: PushState) -> State {
        State(self.grid.index(s.agent) * self.grid.cells() + self.grid.index(s.boxed))
    }

    pub fn decode(&self, state: State) -> PushState {
        let cells = self.grid.cells();
        PushState {
            agent: self.grid.cell(state.0 / cells),
            boxed: self.grid.cell(state.0 % cells),
        }
    }

    pub fn goal_cell(&self, goal: Goal) -> Cell {
        self.grid.cell(goal.0)
    }

    pub fn goal_at(&self, cell: Cell) -> Goal {
        Goal(self.grid.index(cell))
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.grid.contains(cell)
    }

    pub fn is_border(&self, cell: Cell) -> bool {
        self.grid.is_border(cell)
    }

    fn interior_cells(&self) -> Vec<Cell> {
        (1..self.grid.height - 1)
            .flat_map(|y| (1..self.grid.width - 1).map(move |x| Cell::new(x, y)))
            .collect()
    }
}

impl GoalEnv for GridPushEnv {
    fn spec(&self) -> EnvSpec {
        EnvSpec {
            name: "gridpush",
            action_count: 4,
            horizon: self.horizon,
            default_eps_r: 1.0,
            goal_dims: 2,
        }
    }

    /// Box on an interior cell (so it can be pushed in every direction),
    /// agent anywhere else, goal any cell other than the box.
    fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> (State, Goal) {
        let interior = self.interior_cells();
        let boxed = interior[rng.gen_range(0..interior.len())];
        let cells = self.grid.cells();
        let box_index = self.grid.index(boxed);
        let mut agent_index = rng.gen_range(0..cells - 1);
        if agent_index >= box_index {
            agent_index += 1;
        }
        let mut goal_index = rng.gen_range(0..cells - 1);
        if goal_index >= box_index {
            goal_index += 1;
        }
        let state = self.encode(PushState {
            agent: self.grid.cell(agent_index),
            boxed,
        });
        (state, Goal(goal_index))
    }

    fn step(&self, state: State, action: Action) -> Result<State> {
        let m = Move::from_action(action)?;
        let PushState { agent, boxed } = self.decode(state);
        let target = agent.shifted(m);
        if !self.grid.contains(target) {
            return Ok(state);
        }
        if target == boxed {
            let pushed = boxed.shifted(m);
            if !self.grid.contains(pushed) {
                return Ok(state);
            }
            return Ok(self.encode(PushState {
                agent: target,
                boxed: pushed,
            }));
        }
        Ok(self.encode(PushState {
            agent: target,
            boxed,
        }))
    }

    fn achieved_goal(&self, state: State) -> Goal {
        Goal(state.0 % self.grid.cells())
    }

    fn distance(&self, a: Goal, b: Goal) -> Result<f64> {
        if !self.is_valid_goal(a) || !self.is_valid_goal(b) {
            return Err(Error::InvalidArgument("goal cell outside the grid".into()));
        }
        Ok(self.grid.cell(a.0).manhattan(self.grid.cell(b.0)) as f64)
    }

    fn is_valid_state(&self, state: State) -> bool {
        let cells = self.grid.cells();
        state.0 < cells * cells && state.0 / cells != state.0 % cells
    }

    fn is_valid_goal(&self, goal: Goal) -> bool {
        goal.0 < self.grid.cells()
    }

    fn key_bounds(&self) -> Option<(u64, u64)> {
        let cells = self.grid.cells();
        Some((cells * cells, cells))
    }

    fn all_states(&self) -> Option<Vec<State>> {
        let cells = self.grid.cells();
        Some(
            (0..cells * cells)
                .map(State)
                .filter(|&s| self.is_valid_state(s))
                .collect(),
        )
    }

    fn all_goals(&self) -> Option<Vec<Goal>> {
        Some((0..self.grid.cells()).map(Goal).collect())
    }

    /// `[agent_x, agent_y, box_x, box_y]`.
    fn state_from_coords(&self, coords: &[i64]) -> Result<State> {
        let bad = || {
            Error::InvalidArgument(format!(
                "state {coords:?} is not a valid [agent_x, agent_y, box_x, box_y] on the {}x{} grid",
                self.grid.width, self.grid.height
            ))
        };
        if coords.len() != 4 {
            return Err(bad());
        }
        let agent = self.grid.cell_from_coords(&coords[..2]).map_err(|_| bad())?;
        let boxed = self.grid.cell_from_coords(&coords[2..]).map_err(|_| bad())?;
        if agent == boxed {
            return Err(bad());
        }
        Ok(self.encode(PushState { agent, boxed }))
    }

    fn goal_from_coords(&self, coords: &[i64]) -> Result<Goal> {
        self.grid
            .cell_from_coords(coords)
            .map(|c| Goal(self.grid.index(c)))
    }

    /// The box position.
    fn plane_coords(&self, state: State) -> Option<(i64, i64)> {
        let c = self.decode(state).boxed;
        Some((c.x, c.y))
    }
}

// ---------------------------------------------------------------------------
// Line reaching

/// Agent on a grid whose goal is a target row: only the y-coordinate counts.
#[derive(Clone, Debug, PartialEq)]
pub struct LineReachEnv {
    grid: Grid,
}

impl LineReachEnv {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width < 1 || height < 2 || width * height > 1 << 20 {
            return Err(Error::InvalidArgument(format!(
                "linereach needs width >= 1 and height >= 2, got {width}x{height}"
            )));
        }
        Ok(Self {
            grid: Grid {
                width: width as i64,
                height: height as i64,
            },
        })
    }

    pub fn encode(&self, cell: Cell) -> State {
        State(self.grid.index(cell))
    }

    pub fn decode(&self, state: State) -> Cell {
        self.grid.cell(state.0)
    }
}

impl GoalEnv for LineReachEnv {
    fn spec(&self) -> EnvSpec {
        EnvSpec {
            name: "linereach",
            action_count: 4,
            horizon: 2 * self.grid.height as usize,
            default_eps_r: 0.5,
            goal_dims: 1,
        }
    }

    fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> (State, Goal) {
        let state = rng.gen_range(0..self.grid.cells());
        let goal = rng.gen_range(0..self.grid.height as u64);
        (State(state), Goal(goal))
    }

    fn step(&self, state: State, action: Action) -> Result<State> {
        let m = Move::from_action(action)?;
        let c = self.decode(state).shifted(m);
        let clamped = Cell::new(
            c.x.clamp(0, self.grid.width - 1),
            c.y.clamp(0, self.grid.height - 1),
        );
        Ok(self.encode(clamped))
    }

    fn achieved_goal(&self, state: State) -> Goal {
        Goal(self.decode(state).y as u64)
    }

    fn distance(&self, a: Goal, b: Goal) -> Result<f64> {
        if !self.is_valid_goal(a) || !self.is_valid_goal(b) {
            return Err(Error::InvalidArgument("goal row outside the grid".into()));
        }
        Ok(a.0.abs_diff(b.0) as f64)
    }

    fn is_valid_state(&self, state: State) -> bool {
        state.0 < self.grid.cells()
    }

    fn is_valid_goal(&self, goal: Goal) -> bool {
        goal.0 < self.grid.height as u64
    }

    fn key_bounds(&self) -> Option<(u64, u64)> {
        Some((self.grid.cells(), self.grid.height as u64))
    }

    fn all_states(&self) -> Option<Vec<State>> {
        Some((0..self.grid.cells()).map(State).collect())
    }

    fn all_goals(&self) -> Option<Vec<Goal>> {
        Some((0..self.grid.height as u64).map(Goal).collect())
    }

    /// `[x, y]`.
    fn state_from_coords(&self, coords: &[i64]) -> Result<State> {
        self.grid.cell_from_coords(coords).map(|c| self.encode(c))
    }

    /// `[y]`.
    fn goal_from_coords(&self, coords: &[i64]) -> Result<Goal> {
        match coords {
            [y] if (0..self.grid.height).contains(y) => Ok(Goal(*y as u64)),
            _ => Err(Error::InvalidArgument(format!(
                "goal {coords:?} is not a row of a grid with height {}",
                self.grid.height
            ))),
        }
    }

    fn plane_coords(&self, state: State) -> Option<(i64, i64)> {
        let c = self.decode(state);
        Some((c.x, c.y))
    }
}

// ---------------------------------------------------------------------------
// Config-selected environment

/// Environment section of an experiment config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum EnvConfig {
    Bitflip {
        n: usize,
        #[serde(default = "default_true")]
        relative_keys: bool,
    },
    Gridpush {
        width: usize,
        height: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<usize>,
    },
    Linereach {
        width: usize,
        height: usize,
    },
}

fn default_true() -> bool {
    true
}

impl EnvConfig {
    pub fn build(&self) -> Result<Env> {
        Ok(match *self {
            EnvConfig::Bitflip { n, relative_keys } => {
                Env::BitFlip(BitFlipEnv::new(n)?.with_relative_keys(relative_keys))
            }
            EnvConfig::Gridpush {
                width,
                height,
                horizon,
            } => {
                let env = GridPushEnv::new(width, height)?;
                Env::GridPush(match horizon {
                    Some(h) => env.with_horizon(h)?,
                    None => env,
                })
            }
            EnvConfig::Linereach { width, height } => {
                Env::LineReach(LineReachEnv::new(width, height)?)
            }
        })
    }
}

/// One of the built-in environments.
#[derive(Clone, Debug, PartialEq)]
pub enum Env {
    BitFlip(BitFlipEnv),
    GridPush(GridPushEnv),
    LineReach(LineReachEnv),
}

macro_rules! dispatch {
    ($self:ident, $env:ident => $body:expr) => {
        match $self {
            Env::BitFlip($env) => $body,
            Env::GridPush($env) => $body,
            Env::LineReach($env) => $body,
        }
    };
}

impl GoalEnv for Env {
    fn spec(&self) -> EnvSpec {
        dispatch!(self, e => e.spec())
    }

    fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> (State, Goal) {
        dispatch!(self, e => e.reset(rng))
    }

    fn step(&self, state: State, action: Action) -> Result<State> {
        dispatch!(self, e => e.step(state, action))
    }

    fn achieved_goal(&self, state: State) -> Goal {
        dispatch!(self, e => e.achieved_goal(state))
    }

    fn distance(&self, a: Goal, b: Goal) -> Result<f64> {
        dispatch!(self, e => e.distance(a, b))
    }

    fn is_valid_state(&self, state: State) -> bool {
        dispatch!(self, e => e.is_valid_state(state))
    }

    fn is_valid_goal(&self, goal: Goal) -> bool {
        dispatch!(self, e => e.is_valid_goal(goal))
    }

    fn key_bounds(&self) -> Option<(u64, u64)> {
        dispatch!(self, e => e.key_bounds())
    }

    fn all_states(&self) -> Option<Vec<State>> {
        dispatch!(self, e => e.all_states())
    }

    fn all_goals(&self) -> Option<Vec<Goal>> {
        dispatch!(self, e => e.all_goals())
    }

    fn value_key(&self, state: State, goal: Goal) -> (u64, u64) {
        dispatch!(self, e => e.value_key(state, goal))
    }

    fn state_from_coords(&self, coords: &[i64]) -> Result<State> {
        dispatch!(self, e => e.state_from_coords(coords))
    }

    fn goal_from_coords(&self, coords: &[i64]) -> Result<Goal> {
        dispatch!(self, e => e.goal_from_coords(coords))
    }

    fn plane_coords(&self, state: State) -> Option<(i64, i64)> {
        dispatch!(self, e => e.plane_coords(state))
    }

    fn is_planar(&self) -> bool {
        dispatch!(self, e => e.is_planar())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::{HashSet, VecDeque};

    fn push(env: &GridPushEnv, agent: (i64, i64), boxed: (i64, i64)) -> State {
        env.encode(PushState {
            agent: Cell::new(agent.0, agent.1),
            boxed: Cell::new(boxed.0, boxed.1),
        })
    }

    #[test]
    fn bitflip_rejects_out_of_range_sizes() {
        assert!(BitFlipEnv::new(2).is_err());
        assert!(BitFlipEnv::new(31).is_err());
        assert!(BitFlipEnv::new(3).is_ok());
    }

    #[test]
    fn bitflip_reset_small_space() {
        let env = BitFlipEnv::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let (s, g) = env.reset(&mut rng);
            assert!(s.0 < 8 && g.0 < 8);
        }
    }

    #[test]
    fn reset_is_deterministic() {
        let envs = [
            Env::BitFlip(BitFlipEnv::new(10).unwrap()),
            Env::GridPush(GridPushEnv::new(5, 5).unwrap()),
            Env::LineReach(LineReachEnv::new(5, 8).unwrap()),
        ];
        for env in &envs {
            let a = env.reset(&mut ChaCha8Rng::seed_from_u64(3));
            let b = env.reset(&mut ChaCha8Rng::seed_from_u64(3));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn gridpush_reset_separates_agent_box_goal() {
        let env = GridPushEnv::new(4, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let (s, g) = env.reset(&mut rng);
            let d = env.decode(s);
            assert_ne!(d.agent, d.boxed);
            assert_ne!(env.achieved_goal(s), g);
            assert!(env.is_valid_state(s) && env.is_valid_goal(g));
            assert!(!env.is_border(d.boxed));
        }
    }

    #[test]
    fn bitflip_step_flips_one_bit() {
        let env = BitFlipEnv::new(3).unwrap();
        let s = State(BitFlipEnv::encode(&[0, 1, 1]));
        let next = env.step(s, Action(0)).unwrap();
        assert_eq!(env.decode(next.0), vec![1, 1, 1]);
        assert!(env.step(s, Action(3)).is_err());
    }

    #[test]
    fn gridpush_push_and_wall() {
        let env = GridPushEnv::new(5, 5).unwrap();
        let up = Move::Up.action();
        let next = env.step(push(&env, (2, 2), (2, 3)), up).unwrap();
        assert_eq!(next, push(&env, (2, 3), (2, 4)));
        let blocked = push(&env, (2, 3), (2, 4));
        assert_eq!(env.step(blocked, up).unwrap(), blocked);
        // agent against the outer wall stays put
        let corner = push(&env, (0, 0), (3, 3));
        assert_eq!(env.step(corner, Move::Left.action()).unwrap(), corner);
        assert!(env.step(corner, Action(4)).is_err());
    }

    /// Independent check of the push rule: brute-force enumeration of every
    /// state and move on a 5x5 grid against a direct restatement.
    #[test]
    fn gridpush_rule_enumeration() {
        let env = GridPushEnv::new(5, 5).unwrap();
        for s in env.all_states().unwrap() {
            let PushState { agent, boxed } = env.decode(s);
            for m in Move::ALL {
                let next = env.decode(env.step(s, m.action()).unwrap());
                let (dx, dy) = m.delta();
                let t = Cell::new(agent.x + dx, agent.y + dy);
                let in_grid = |c: Cell| c.x >= 0 && c.x < 5 && c.y >= 0 && c.y < 5;
                let expected = if !in_grid(t) {
                    (agent, boxed)
                } else if t == boxed {
                    let b2 = Cell::new(boxed.x + dx, boxed.y + dy);
                    if in_grid(b2) {
                        (t, b2)
                    } else {
                        (agent, boxed)
                    }
                } else {
                    (t, boxed)
                };
                assert_eq!((next.agent, next.boxed), expected);
                assert_ne!(next.agent, next.boxed);
            }
        }
    }

    #[test]
    fn achieved_goal_examples() {
        let bf = BitFlipEnv::new(3).unwrap();
        assert_eq!(bf.achieved_goal(State(0b01)), Goal(0b01));
        let gp = GridPushEnv::new(4, 4).unwrap();
        assert_eq!(
            gp.goal_cell(gp.achieved_goal(push(&gp, (0, 0), (3, 2)))),
            Cell::new(3, 2)
        );
        let lr = LineReachEnv::new(6, 10).unwrap();
        assert_eq!(lr.achieved_goal(lr.encode(Cell::new(4, 7))), Goal(7));
    }

    #[test]
    fn distance_examples() {
        let bf = BitFlipEnv::new(3).unwrap();
        let a = Goal(BitFlipEnv::encode(&[1, 0, 1]));
        let b = Goal(BitFlipEnv::encode(&[1, 1, 1]));
        assert_eq!(bf.distance(a, b).unwrap(), 1.0);
        assert!(bf.distance(a, Goal(8)).is_err());

        let gp = GridPushEnv::new(4, 4).unwrap();
        let d = gp
            .distance(gp.goal_at(Cell::new(0, 0)), gp.goal_at(Cell::new(2, 3)))
            .unwrap();
        assert_eq!(d, 5.0);
        assert!(gp.distance(Goal(0), Goal(16)).is_err());

        let lr = LineReachEnv::new(4, 10).unwrap();
        assert_eq!(lr.distance(Goal(7), Goal(7)).unwrap(), 0.0);
        assert!(lr.distance(Goal(7), Goal(10)).is_err());
    }

    #[test]
    fn linereach_clamps() {
        let env = LineReachEnv::new(3, 3).unwrap();
        let s = env.encode(Cell::new(0, 2));
        assert_eq!(env.step(s, Move::Up.action()).unwrap(), s);
        assert_eq!(env.step(s, Move::Left.action()).unwrap(), s);
        assert_eq!(
            env.step(s, Move::Right.action()).unwrap(),
            env.encode(Cell::new(1, 2))
        );
    }

    #[test]
    fn bitflip_success_is_exact_match() {
        let env = BitFlipEnv::new(5).unwrap();
        for a in 0..32 {
            for b in 0..32 {
                let d = env.distance(Goal(a), Goal(b)).unwrap();
                assert_eq!(crate::mdp::is_success(d, 0.5).unwrap(), a == b);
            }
        }
    }

    #[test]
    fn relative_keys_collapse_xor_pairs() {
        let env = BitFlipEnv::new(4).unwrap();
        assert_eq!(env.value_key(State(0b1010), Goal(0b0011)), (0b1001, 0));
        let exact = env.clone().with_relative_keys(false);
        assert_eq!(exact.value_key(State(3), Goal(5)), (3, 5));
    }

    /// Breadth-first search over the full state space: from every initial
    /// configuration `reset` can produce, every goal cell is reachable.
    #[test]
    fn gridpush_goals_reachable_from_initial_configs() {
        for (w, h) in [(4, 4), (5, 5), (4, 5)] {
            let env = GridPushEnv::new(w, h).unwrap();
            for s0 in env.all_states().unwrap() {
                if env.is_border(env.decode(s0).boxed) {
                    continue;
                }
                let mut seen = HashSet::from([s0]);
                let mut queue = VecDeque::from([s0]);
                let mut boxes = HashSet::new();
                while let Some(s) = queue.pop_front() {
                    boxes.insert(env.achieved_goal(s));
                    for m in Move::ALL {
                        let n = env.step(s, m.action()).unwrap();
                        if seen.insert(n) {
                            queue.push_back(n);
                        }
                    }
                }
                assert_eq!(boxes.len() as i64, env.width() * env.height());
            }
        }
    }

    #[test]
    fn coords_parsing() {
        let gp = GridPushEnv::new(5, 5).unwrap();
        assert!(gp.state_from_coords(&[0, 0, 1, 1]).is_ok());
        assert!(gp.state_from_coords(&[0, 0, 0, 0]).is_err());
        assert!(gp.state_from_coords(&[0, 0, 5, 1]).is_err());
        assert!(gp.goal_from_coords(&[4, 4]).is_ok());
        assert!(gp.goal_from_coords(&[4, 5]).is_err());
        let bf = BitFlipEnv::new(3).unwrap();
        assert_eq!(bf.state_from_coords(&[1, 0, 1]).unwrap(), State(0b101));
        assert!(bf.state_from_coords(&[1, 0]).is_err());
        assert!(bf.state_from_coords(&[2, 0, 0]).is_err());
        let lr = LineReachEnv::new(3, 4).unwrap();
        assert_eq!(lr.goal_from_coords(&[3]).unwrap(), Goal(3));
        assert!(lr.goal_from_coords(&[4]).is_err());
    }

    #[test]
    fn env_config_parses_and_rejects_unknown_keys() {
        let c: EnvConfig = serde_json::from_str(r#"{"name":"gridpush","width":6,"height":6}"#).unwrap();
        assert!(matches!(c.build().unwrap(), Env::GridPush(_)));
        let c: EnvConfig = serde_json::from_str(r#"{"name":"bitflip","n":6}"#).unwrap();
        assert_eq!(c.build().unwrap().spec().horizon, 6);
        assert!(serde_json::from_str::<EnvConfig>(r#"{"name":"bitflip","n":6,"m":1}"#).is_err());
        assert!(serde_json::from_str::<EnvConfig>(r#"{"name":"maze","n":6}"#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn gridpush_conservation(seed in any::<u64>(), moves in proptest::collection::vec(0usize..4, 1..60)) {
                let env = GridPushEnv::new(5, 6).unwrap();
                let (mut s, _) = env.reset(&mut ChaCha8Rng::seed_from_u64(seed));
                for a in moves {
                    let next = env.step(s, Action(a)).unwrap();
                    prop_assert_eq!(next, env.step(s, Action(a)).unwrap());
                    prop_assert!(env.is_valid_state(next));
                    s = next;
                }
            }

            #[test]
            fn distance_is_a_metric(a in 0u64..64, b in 0u64..64) {
                let env = BitFlipEnv::new(6).unwrap();
                let dab = env.distance(Goal(a), Goal(b)).unwrap();
                prop_assert_eq!(dab, env.distance(Goal(b), Goal(a)).unwrap());
                prop_assert_eq!(env.distance(Goal(a), Goal(a)).unwrap(), 0.0);
                prop_assert!(dab >= 0.0);
                let gp = GridPushEnv::new(8, 8).unwrap();
                let gab = gp.distance(Goal(a), Goal(b)).unwrap();
                prop_assert_eq!(gab, gp.distance(Goal(b), Goal(a)).unwrap());
            }
        }
    }
}
