use crate::error::{Error, Result};

/// One environment transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    /// True when `next_state` is terminal or the episode hit its horizon cap.
    pub done: bool,
}

/// A contiguous piece of one episode.
///
/// A trajectory ends either at a terminal state (`truncated == false`) or is
/// cut short, by the horizon cap or by the end of a rollout, in which case the
/// value of `bootstrap_state` stands in for the unseen remainder.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub steps: Vec<StepRecord>,
    pub truncated: bool,
    pub bootstrap_state: Option<usize>,
}

impl Trajectory {
    /// Builds a trajectory that ends at a terminal state.
    pub fn terminal(steps: Vec<StepRecord>) -> Result<Self> {
        let t = Self { steps, truncated: false, bootstrap_state: None };
        t.validate()?;
        Ok(t)
    }

    /// Builds a trajectory cut before termination; bootstraps from the last `next_state`.
    pub fn truncated(steps: Vec<StepRecord>) -> Result<Self> {
        let bootstrap_state = steps.last().map(|s| s.next_state);
        let t = Self { steps, truncated: true, bootstrap_state };
        t.validate()?;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// State visited at position `u` in `0..=len`; position `len` is the final next state.
    pub fn state_at(&self, u: usize) -> usize {
        if u < self.steps.len() {
            self.steps[u].state
        } else {
            self.steps[self.steps.len() - 1].next_state
        }
    }

    /// Whether the value of the state at position `u` should be bootstrapped.
    /// Only the final position of a terminal trajectory is forced to zero.
    pub fn bootstraps_at(&self, u: usize) -> bool {
        u < self.steps.len() || self.truncated
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    pub fn validate(&self) -> Result<()> {
        for w in self.steps.windows(2) {
            if w[0].next_state != w[1].state {
                return Err(Error::InvalidArgument(format!(
                    "steps do not chain: next_state {} then state {}",
                    w[0].next_state, w[1].state
                )));
            }
        }
        match (self.truncated, self.bootstrap_state) {
            (true, None) if !self.steps.is_empty() => {
                Err(Error::InvalidArgument("truncated trajectory without bootstrap state".into()))
            }
            (false, Some(_)) => Err(Error::InvalidArgument("terminal trajectory with bootstrap state".into())),
            _ => Ok(()),
        }
    }
}
