use crate::env::{MdpSpec, StepRecord, Trajectory};
use crate::error::{Error, Result};
use crate::tabular::TabularPolicy;

/// Node budget used when callers have no specific limit in mind.
pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

/// Every trajectory of positive probability under `policy`, starting from the
/// initial distribution and cut at `horizon` steps, with its exact probability.
pub fn enumerate_trajectories(
    mdp: &MdpSpec,
    policy: &TabularPolicy,
    horizon: usize,
    budget: usize,
) -> Result<Vec<(Trajectory, f64)>> {
    let mut walker = Walker { mdp, policy, horizon, budget, nodes: 0, out: Vec::new(), prefix: Vec::new() };
    for (s, &p0) in mdp.initial_distribution().iter().enumerate() {
        if p0 > 0.0 {
            if mdp.is_terminal(s) {
                walker.out.push((Trajectory::default(), p0));
            } else {
                walker.expand(s, None, p0)?;
            }
        }
    }
    Ok(walker.out)
}

/// Trajectories that start in `state`, take `first_action`, then follow `policy`.
pub fn enumerate_from(
    mdp: &MdpSpec,
    policy: &TabularPolicy,
    state: usize,
    first_action: usize,
    horizon: usize,
    budget: usize,
) -> Result<Vec<(Trajectory, f64)>> {
    let mut walker = Walker { mdp, policy, horizon, budget, nodes: 0, out: Vec::new(), prefix: Vec::new() };
    if !mdp.is_terminal(state) && horizon > 0 {
        walker.expand(state, Some(first_action), 1.0)?;
    }
    Ok(walker.out)
}

struct Walker<'a> {
    mdp: &'a MdpSpec,
    policy: &'a TabularPolicy,
    horizon: usize,
    budget: usize,
    nodes: usize,
    out: Vec<(Trajectory, f64)>,
    prefix: Vec<StepRecord>,
}

impl Walker<'_> {
    fn expand(&mut self, state: usize, forced: Option<usize>, prob: f64) -> Result<()> {
        let actions: Vec<(usize, f64)> = match forced {
            Some(a) => vec![(a, 1.0)],
            None => {
                (0..self.mdp.n_actions()).map(|a| (a, self.policy.prob(state, a))).filter(|(_, p)| *p > 0.0).collect()
            }
        };
        let depth = self.prefix.len() + 1;
        for (action, pa) in actions {
            let successors: Vec<_> = self.mdp.successors(state, action).collect();
            for (next, pn, reward) in successors {
                self.nodes += 1;
                if self.nodes > self.budget {
                    return Err(Error::BudgetExceeded { budget: self.budget });
                }
                let terminal = self.mdp.is_terminal(next);
                let capped = depth >= self.horizon;
                self.prefix.push(StepRecord { state, action, reward, next_state: next, done: terminal || capped });
                let p = prob * pa * pn;
                if terminal {
                    self.out.push((Trajectory::terminal(self.prefix.clone())?, p));
                } else if capped {
                    self.out.push((Trajectory::truncated(self.prefix.clone())?, p));
                } else {
                    self.expand(next, None, p)?;
                }
                self.prefix.pop();
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_fig1a, make_fig1b, make_fig1c};

    #[test]
    fn fig1a_uniform_has_three_trajectories() {
        let mdp = make_fig1a();
        let pi = TabularPolicy::uniform(&mdp);
        let trajs = enumerate_trajectories(&mdp, &pi, 10, DEFAULT_NODE_BUDGET).unwrap();
        let mut probs: Vec<f64> = trajs.iter().map(|(_, p)| *p).collect();
        probs.sort_by(f64::total_cmp);
        assert_eq!(probs, vec![0.25, 0.25, 0.5]);
        let via_a1 = trajs.iter().find(|(t, _)| t.steps[0].action == 0).unwrap();
        assert_eq!(via_a1.0.len(), 1);
        assert_eq!(via_a1.1, 0.5);
    }

    #[test]
    fn deterministic_policy_gives_single_trajectory() {
        let mdp = make_fig1a();
        let pi = TabularPolicy::deterministic(&mdp, &[1, 0, 1, 0, 0, 0]);
        let trajs = enumerate_trajectories(&mdp, &pi, 10, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(trajs.len(), 1);
        assert_eq!(trajs[0].1, 1.0);
        assert_eq!(trajs[0].0.total_reward(), 2.0);
    }

    #[test]
    fn mass_sums_to_one() {
        for mdp in [make_fig1a(), make_fig1b(), make_fig1c(0.7).unwrap()] {
            let pi = TabularPolicy::uniform(&mdp);
            let total: f64 =
                enumerate_trajectories(&mdp, &pi, 10, DEFAULT_NODE_BUDGET).unwrap().iter().map(|(_, p)| p).sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn horizon_cut_marks_truncation() {
        let mdp = make_fig1a();
        let pi = TabularPolicy::uniform(&mdp);
        let trajs = enumerate_trajectories(&mdp, &pi, 1, DEFAULT_NODE_BUDGET).unwrap();
        let cut = trajs.iter().find(|(t, _)| t.truncated).unwrap();
        assert_eq!(cut.0.bootstrap_state, Some(2));
    }

    #[test]
    fn budget_is_enforced() {
        let mdp = make_fig1c(1.0).unwrap();
        let pi = TabularPolicy::uniform(&mdp);
        let err = enumerate_trajectories(&mdp, &pi, 10, 3).unwrap_err();
        assert_eq!(err, Error::BudgetExceeded { budget: 3 });
        assert!(err.to_string().contains('3'));
    }
}
