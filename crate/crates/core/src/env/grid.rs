//! Grid tasks: the sparse-reward maze and the noisy cliff walk.
//!
//! Both compile to an exact [`MdpSpec`] so the tabular solvers apply to them.
//! Coordinates are `(x, y)` with `y = 0` the bottom row; the state id of a
//! cell is `y * width + x`. Moves that would leave the grid or enter a wall
//! leave the agent in place.

use std::cmp::Ordering;

use crate::env::{Environment, MdpBuilder, MdpSpec, TabularEnv};
use crate::error::{Error, Result};
use crate::nn::FeatureEncoding;

/// Monte-Carlo success probability of the uniform random walk on the default
/// 9x9 maze with horizon 100 (10^5 rollouts, seed 0; see the env tests).
pub const MAZE_RANDOM_WALK_SUCCESS: f64 = 0.1057;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    North = 0,
    East = 1,
    South = 2,
    West = 3,
}

impl Move {
    pub const ALL: [Move; 4] = [Move::North, Move::East, Move::South, Move::West];

    fn delta(self) -> (i64, i64) {
        match self {
            Move::North => (0, 1),
            Move::East => (1, 0),
            Move::South => (0, -1),
            Move::West => (-1, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Free,
    Wall,
    Cliff,
    Goal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridLayout {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<Cell>,
    pub start: (usize, usize),
}

impl GridLayout {
    pub fn id(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn coords(&self, id: usize) -> (usize, usize) {
        (id % self.width, id / self.width)
    }

    pub fn cell(&self, x: usize, y: usize) -> Cell {
        self.cells[self.id(x, y)]
    }

    pub fn start_id(&self) -> usize {
        self.id(self.start.0, self.start.1)
    }

    /// Cell reached by attempting `mv` from `id`.
    pub fn apply(&self, id: usize, mv: Move) -> usize {
        let (x, y) = self.coords(id);
        let (dx, dy) = mv.delta();
        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
        if nx < 0 || ny < 0 || nx >= self.width as i64 || ny >= self.height as i64 {
            return id;
        }
        let next = self.id(nx as usize, ny as usize);
        if self.cells[next] == Cell::Wall {
            id
        } else {
            next
        }
    }

    pub fn is_terminal(&self, id: usize) -> bool {
        matches!(self.cells[id], Cell::Goal | Cell::Cliff)
    }

    /// Compiles the grid into an MDP. With probability `noise` the intended
    /// move is replaced by a uniformly random one (possibly the same move).
    fn compile(&self, gamma: f64, noise: f64, reward: impl Fn(usize, usize) -> f64) -> Result<MdpSpec> {
        let n = self.width * self.height;
        let mut b = MdpBuilder::new(n, Move::ALL.len(), gamma).start(self.start_id());
        for id in 0..n {
            if self.is_terminal(id) || self.cells[id] == Cell::Wall {
                if self.is_terminal(id) {
                    b = b.terminal(id);
                } else {
                    // walls are unreachable; give them a self-loop so rows stay stochastic
                    for a in 0..Move::ALL.len() {
                        b = b.transition(id, a, id, 1.0, 0.0);
                    }
                }
                continue;
            }
            for (a, intended) in Move::ALL.iter().enumerate() {
                let mut outcomes = vec![(self.apply(id, *intended), 1.0 - noise)];
                for mv in Move::ALL {
                    outcomes.push((self.apply(id, mv), noise / Move::ALL.len() as f64));
                }
                for (next, p) in outcomes {
                    if p > 0.0 {
                        b = b.transition(id, a, next, p, reward(id, next));
                    }
                }
            }
        }
        b.build()
    }

    /// Coordinates scaled to `[-1, 1]`.
    fn coordinate_encoding(&self) -> FeatureEncoding {
        let scale = |v: usize, extent: usize| 2.0 * v as f64 / (extent.max(2) - 1) as f64 - 1.0;
        let rows = (0..self.width * self.height)
            .map(|id| {
                let (x, y) = self.coords(id);
                vec![scale(x, self.width), scale(y, self.height)]
            })
            .collect::<Vec<_>>();
        FeatureEncoding::from_rows(rows)
    }
}

/// Open `width x height` grid. Start bottom-left, goal top-right. Reward 1 on
/// entering the goal, 0 otherwise; discount 0.99.
pub fn make_sparse_maze(width: usize, height: usize, horizon: usize) -> Result<TabularEnv> {
    if width < 5 || height < 5 {
        return Err(Error::InvalidArgument(format!("maze must be at least 5x5, got {width}x{height}")));
    }
    let mut cells = vec![Cell::Free; width * height];
    cells[(height - 1) * width + width - 1] = Cell::Goal;
    let layout = GridLayout { width, height, cells, start: (0, 0) };
    let mdp = layout.compile(0.99, 0.0, |_, next| if layout.cells[next] == Cell::Goal { 1.0 } else { 0.0 })?;
    let encoding = layout.coordinate_encoding();
    Ok(TabularEnv::with_encoding("maze", mdp, horizon, encoding).with_layout(layout))
}

/// Fraction of `rollouts` uniform-random episodes with positive return.
pub fn random_walk_success_rate(env: &mut dyn Environment, rollouts: usize, seed: u64) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut successes = 0usize;
    for _ in 0..rollouts {
        env.reset(&mut rng);
        let mut ret = 0.0;
        loop {
            let action = rng.random_range(0..env.n_actions());
            let out = env.step(action, &mut rng)?;
            ret += out.reward;
            if out.done() {
                break;
            }
        }
        if ret > 0.0 {
            successes += 1;
        }
    }
    Ok(successes as f64 / rollouts.max(1) as f64)
}

/// Parameters of the cliff walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CliffConfig {
    pub length: usize,
    pub height: usize,
    pub cliff_penalty: f64,
    pub step_reward: f64,
    pub action_noise: f64,
    pub horizon: usize,
    pub gamma: f64,
}

impl Default for CliffConfig {
    fn default() -> Self {
        Self {
            length: 12,
            height: 4,
            cliff_penalty: -100.0,
            step_reward: 1.0,
            action_noise: 0.1,
            horizon: 200,
            gamma: 0.99,
        }
    }
}

/// Cliff walk with the default height, noise and discount.
pub fn make_cliff(length: usize, cliff_penalty: f64, step_reward: f64, horizon: usize) -> Result<TabularEnv> {
    make_cliff_with(CliffConfig { length, cliff_penalty, step_reward, horizon, ..CliffConfig::default() })
}

/// `length x height` corridor. Start at `(0, 0)`, goal at `(length - 1, 0)`,
/// and every cell between them on the bottom row is cliff. Moving east pays
/// `step_reward`, moving west costs it, so any path to the goal collects
/// `step_reward * (length - 1)`. Entering the cliff pays `cliff_penalty` and
/// ends the episode.
pub fn make_cliff_with(cfg: CliffConfig) -> Result<TabularEnv> {
    if cfg.length < 3 || cfg.height < 2 {
        return Err(Error::InvalidArgument("cliff needs length >= 3 and height >= 2".into()));
    }
    if cfg.cliff_penalty.partial_cmp(&0.0) != Some(Ordering::Less) {
        return Err(Error::InvalidArgument("cliff_penalty must be negative".into()));
    }
    if cfg.step_reward.partial_cmp(&0.0) != Some(Ordering::Greater) {
        return Err(Error::InvalidArgument("step_reward must be positive".into()));
    }
    if !(0.0..=1.0).contains(&cfg.action_noise) {
        return Err(Error::InvalidArgument("action_noise must lie in [0, 1]".into()));
    }
    let (w, h) = (cfg.length, cfg.height);
    let mut cells = vec![Cell::Free; w * h];
    for cell in cells.iter_mut().take(w - 1).skip(1) {
        *cell = Cell::Cliff;
    }
    cells[w - 1] = Cell::Goal;
    let layout = GridLayout { width: w, height: h, cells, start: (0, 0) };
    let reward = |from: usize, to: usize| {
        if layout.cells[to] == Cell::Cliff {
            return cfg.cliff_penalty;
        }
        let (fx, _) = layout.coords(from);
        let (tx, _) = layout.coords(to);
        (tx as f64 - fx as f64) * cfg.step_reward
    };
    let mdp = layout.compile(cfg.gamma, cfg.action_noise, reward)?;
    let encoding = layout.coordinate_encoding();
    Ok(TabularEnv::with_encoding("cliff", mdp, cfg.horizon, encoding).with_layout(layout))
}
