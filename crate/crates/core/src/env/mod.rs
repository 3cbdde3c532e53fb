//! Environments: the tabular MDP representation, the episodic environment
//! contract, the illustrative fixtures and the two grid tasks.

mod enumerate;
mod fixtures;
mod grid;
mod mdp;
mod trajectory;

use std::sync::Arc;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::nn::FeatureEncoding;

pub use enumerate::{enumerate_from, enumerate_trajectories, DEFAULT_NODE_BUDGET};
pub use fixtures::{make_fig1a, make_fig1b, make_fig1c};
pub use grid::{
    make_cliff, make_cliff_with, make_sparse_maze, random_walk_success_rate, Cell, CliffConfig, GridLayout, Move,
    MAZE_RANDOM_WALK_SUCCESS,
};
pub use mdp::{MdpBuilder, MdpSpec};
pub use trajectory::{StepRecord, Trajectory};

/// Outcome of a single [`Environment::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next_state: usize,
    pub reward: f64,
    /// `next_state` is terminal.
    pub terminal: bool,
    /// The episode hit its horizon cap without terminating.
    pub truncated: bool,
}

impl StepOutcome {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

/// Episodic environment with discrete states and actions.
///
/// All randomness comes from the `rng` argument.
pub trait Environment {
    fn name(&self) -> &str;
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn encoding(&self) -> &FeatureEncoding;
    fn is_terminal(&self, state: usize) -> bool;
    fn reset(&mut self, rng: &mut dyn RngCore) -> usize;
    fn step(&mut self, action: usize, rng: &mut dyn RngCore) -> Result<StepOutcome>;
}

/// An episodic environment driven by an exact [`MdpSpec`] with a horizon cap.
#[derive(Debug, Clone)]
pub struct TabularEnv {
    name: String,
    mdp: Arc<MdpSpec>,
    encoding: FeatureEncoding,
    horizon: usize,
    layout: Option<GridLayout>,
    state: usize,
    elapsed: usize,
    finished: bool,
}

impl TabularEnv {
    pub fn new(name: impl Into<String>, mdp: MdpSpec, horizon: usize) -> Self {
        let encoding = FeatureEncoding::one_hot(mdp.n_states());
        Self::with_encoding(name, mdp, horizon, encoding)
    }

    pub fn with_encoding(name: impl Into<String>, mdp: MdpSpec, horizon: usize, encoding: FeatureEncoding) -> Self {
        Self {
            name: name.into(),
            mdp: Arc::new(mdp),
            encoding,
            horizon: horizon.max(1),
            layout: None,
            state: 0,
            elapsed: 0,
            finished: true,
        }
    }

    pub(crate) fn with_layout(mut self, layout: GridLayout) -> Self {
        self.layout = Some(layout);
        self
    }

    pub fn mdp(&self) -> &MdpSpec {
        &self.mdp
    }

    pub fn shared_mdp(&self) -> Arc<MdpSpec> {
        Arc::clone(&self.mdp)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn layout(&self) -> Option<&GridLayout> {
        self.layout.as_ref()
    }

    pub fn state(&self) -> usize {
        self.state
    }

    pub fn elapsed(&self) -> usize {
        self.elapsed
    }
}

impl Environment for TabularEnv {
    fn name(&self) -> &str {
        &self.name
    }

    fn n_states(&self) -> usize {
        self.mdp.n_states()
    }

    fn n_actions(&self) -> usize {
        self.mdp.n_actions()
    }

    fn encoding(&self) -> &FeatureEncoding {
        &self.encoding
    }

    fn is_terminal(&self, state: usize) -> bool {
        self.mdp.is_terminal(state)
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> usize {
        self.state = self.mdp.sample_initial(rng);
        self.elapsed = 0;
        self.finished = self.mdp.is_terminal(self.state);
        self.state
    }

    fn step(&mut self, action: usize, rng: &mut dyn RngCore) -> Result<StepOutcome> {
        if self.finished {
            return Err(Error::EpisodeFinished);
        }
        let n_actions = self.mdp.n_actions();
        if action >= n_actions {
            return Err(Error::ActionOutOfRange { action, n_actions });
        }
        let next = self.mdp.sample_next(self.state, action, rng);
        let reward = self.mdp.reward(self.state, action, next);
        self.elapsed += 1;
        let terminal = self.mdp.is_terminal(next);
        let truncated = !terminal && self.elapsed >= self.horizon;
        self.state = next;
        self.finished = terminal || truncated;
        Ok(StepOutcome { next_state: next, reward, terminal, truncated })
    }
}
