//! Exact policy evaluation and policy iteration, optionally with Q estimates
//! biased by an order statistic over partial returns.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::advantage::{select, Statistic};
use crate::env::{enumerate_from, MdpSpec, Trajectory, DEFAULT_NODE_BUDGET};
use crate::error::{Error, Result};

/// Tie tolerance for greedy improvement.
const TIE_TOL: f64 = 1e-12;
/// Tolerance when deciding which actions are optimal under the exact Q*.
const OPTIMAL_TOL: f64 = 1e-9;

/// Stochastic policy over a finite MDP, rows indexed by state.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

impl TabularPolicy {
    pub fn uniform(mdp: &MdpSpec) -> Self {
        let (n, m) = (mdp.n_states(), mdp.n_actions());
        Self { n_states: n, n_actions: m, probs: vec![1.0 / m as f64; n * m] }
    }

    /// Puts all mass on `actions[s]` in each state.
    pub fn deterministic(mdp: &MdpSpec, actions: &[usize]) -> Self {
        let (n, m) = (mdp.n_states(), mdp.n_actions());
        let mut probs = vec![0.0; n * m];
        for (s, &a) in actions.iter().enumerate().take(n) {
            probs[s * m + a] = 1.0;
        }
        Self { n_states: n, n_actions: m, probs }
    }

    /// Validates that every non-terminal row is a distribution.
    pub fn from_probs(n_states: usize, n_actions: usize, probs: Vec<f64>, terminal: &[bool]) -> Result<Self> {
        if probs.len() != n_states * n_actions {
            return Err(Error::DimensionMismatch { expected: n_states * n_actions, got: probs.len() });
        }
        for s in 0..n_states {
            if terminal.get(s).copied().unwrap_or(false) {
                continue;
            }
            let row = &probs[s * n_actions..(s + 1) * n_actions];
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| *p < 0.0) || (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!("policy row {s} is not a distribution")));
            }
        }
        Ok(Self { n_states, n_actions, probs })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }

    /// Actions taken with positive probability in `s`.
    pub fn support(&self, s: usize) -> Vec<usize> {
        (0..self.n_actions).filter(|&a| self.prob(s, a) > 0.0).collect()
    }
}

/// State values; terminal entries are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct VTable(pub Vec<f64>);

impl std::ops::Deref for VTable {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Action values indexed `(state, action)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self { n_actions, values: vec![0.0; n_states * n_actions] }
    }

    pub fn n_states(&self) -> usize {
        self.values.len() / self.n_actions
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.n_actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.values[s * self.n_actions + a] = v;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }
}

fn q_from_v(mdp: &MdpSpec, v: &[f64]) -> QTable {
    let mut q = QTable::zeros(mdp.n_states(), mdp.n_actions());
    for s in (0..mdp.n_states()).filter(|&s| !mdp.is_terminal(s)) {
        for a in 0..mdp.n_actions() {
            let val = mdp.successors(s, a).map(|(n, p, r)| p * (r + mdp.gamma() * v[n])).sum();
            q.set(s, a, val);
        }
    }
    q
}

/// States from which some terminal is reachable under `policy`.
fn reaches_terminal(mdp: &MdpSpec, policy: &TabularPolicy) -> Vec<bool> {
    let n = mdp.n_states();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in (0..n).filter(|&s| !mdp.is_terminal(s)) {
        for a in policy.support(s) {
            for (next, _, _) in mdp.successors(s, a) {
                preds[next].push(s);
            }
        }
    }
    let mut ok: Vec<bool> = mdp.terminals().to_vec();
    let mut queue: VecDeque<usize> = (0..n).filter(|&s| ok[s]).collect();
    while let Some(s) = queue.pop_front() {
        for &p in &preds[s] {
            if !ok[p] {
                ok[p] = true;
                queue.push_back(p);
            }
        }
    }
    ok
}

/// Exact `V^pi` and `Q^pi` by a direct linear solve over non-terminal states.
pub fn policy_evaluation(mdp: &MdpSpec, policy: &TabularPolicy) -> Result<(VTable, QTable)> {
    let n = mdp.n_states();
    if policy.n_states() != n || policy.n_actions() != mdp.n_actions() {
        return Err(Error::DimensionMismatch {
            expected: n * mdp.n_actions(),
            got: policy.n_states() * policy.n_actions(),
        });
    }
    if mdp.gamma() >= 1.0 {
        if let Some(state) = reaches_terminal(mdp, policy).iter().position(|ok| !ok) {
            return Err(Error::ImproperPolicy { state });
        }
    }
    let live: Vec<usize> = (0..n).filter(|&s| !mdp.is_terminal(s)).collect();
    let mut slot = vec![usize::MAX; n];
    for (i, &s) in live.iter().enumerate() {
        slot[s] = i;
    }
    let m = live.len();
    let mut a_mat = DMatrix::<f64>::identity(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (i, &s) in live.iter().enumerate() {
        for a in 0..mdp.n_actions() {
            let pa = policy.prob(s, a);
            if pa == 0.0 {
                continue;
            }
            for (next, p, r) in mdp.successors(s, a) {
                b[i] += pa * p * r;
                if !mdp.is_terminal(next) {
                    a_mat[(i, slot[next])] -= mdp.gamma() * pa * p;
                }
            }
        }
    }
    let mut v = vec![0.0; n];
    if m > 0 {
        let sol = a_mat.lu().solve(&b).ok_or(Error::ImproperPolicy { state: live[0] })?;
        for (i, &s) in live.iter().enumerate() {
            v[s] = sol[i];
        }
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("policy evaluation"));
    }
    let q = q_from_v(mdp, &v);
    Ok((VTable(v), q))
}

/// Optimal values by Bellman sweeps until the max residual drops below `tol`.
pub fn value_iteration(mdp: &MdpSpec, tol: f64, max_sweeps: usize) -> Result<(VTable, QTable)> {
    let mut v = vec![0.0; mdp.n_states()];
    for _ in 0..max_sweeps {
        let q = q_from_v(mdp, &v);
        let mut residual = 0.0f64;
        for s in (0..mdp.n_states()).filter(|&s| !mdp.is_terminal(s)) {
            let best = q.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max);
            residual = residual.max((best - v[s]).abs());
            v[s] = best;
        }
        if residual < tol {
            let q = q_from_v(mdp, &v);
            return Ok((VTable(v), q));
        }
    }
    Err(Error::InvalidArgument(format!("value iteration did not reach residual {tol} in {max_sweeps} sweeps")))
}

/// Partial returns `G^(i) = sum_{j<i} gamma^j r_j + gamma^i V(s_i)` for `i = 1..=len`.
pub fn partial_returns(traj: &Trajectory, v: &[f64], gamma: f64) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(traj.len());
    let mut disc = 1.0;
    let mut acc = 0.0;
    for (i, step) in traj.steps.iter().enumerate() {
        acc += disc * step.reward;
        disc *= gamma;
        let boot = if traj.bootstraps_at(i + 1) { v[traj.state_at(i + 1)] } else { 0.0 };
        out.push((i + 1, acc + disc * boot));
    }
    out
}

/// `Q^stat(s, a) = E[stat_i G^(i) | s, a]` by exhaustive enumeration, with the
/// bootstrap values taken from `V^pi`.
pub fn statistic_q(mdp: &MdpSpec, policy: &TabularPolicy, statistic: Statistic, horizon: usize) -> Result<QTable> {
    statistic_q_with_budget(mdp, policy, statistic, horizon, DEFAULT_NODE_BUDGET)
}

pub fn statistic_q_with_budget(
    mdp: &MdpSpec,
    policy: &TabularPolicy,
    statistic: Statistic,
    horizon: usize,
    budget: usize,
) -> Result<QTable> {
    let (v, _) = policy_evaluation(mdp, policy)?;
    let mut q = QTable::zeros(mdp.n_states(), mdp.n_actions());
    for s in (0..mdp.n_states()).filter(|&s| !mdp.is_terminal(s)) {
        for a in 0..mdp.n_actions() {
            let mut total = 0.0;
            for (traj, p) in enumerate_from(mdp, policy, s, a, horizon, budget)? {
                let (stat, _) = select(&partial_returns(&traj, &v, mdp.gamma()), statistic)?;
                total += p * stat;
            }
            q.set(s, a, total);
        }
    }
    Ok(q)
}

/// Argmax policy; actions tied within `1e-12` share the mass uniformly.
pub fn greedy_policy(q: &QTable) -> TabularPolicy {
    let (n, m) = (q.n_states(), q.n_actions());
    let mut probs = vec![0.0; n * m];
    for s in 0..n {
        let row = q.row(s);
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = (0..m).filter(|&a| row[a] >= best - TIE_TOL).collect();
        for &a in &ties {
            probs[s * m + a] = 1.0 / ties.len() as f64;
        }
    }
    TabularPolicy { n_states: n, n_actions: m, probs }
}

/// States reachable from the initial distribution under `policy`.
pub fn reachable_states(mdp: &MdpSpec, policy: &TabularPolicy) -> Vec<bool> {
    let mut seen = vec![false; mdp.n_states()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for (s, p) in mdp.initial_distribution().iter().enumerate() {
        if *p > 0.0 {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        if mdp.is_terminal(s) {
            continue;
        }
        for a in policy.support(s) {
            for (next, _, _) in mdp.successors(s, a) {
                if !seen[next] {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
    }
    seen
}

/// Optimal action sets from the exact optimal Q.
pub fn optimal_action_sets(mdp: &MdpSpec, q_star: &QTable) -> Vec<Vec<usize>> {
    (0..mdp.n_states())
        .map(|s| {
            let row = q_star.row(s);
            let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (0..mdp.n_actions()).filter(|&a| row[a] >= best - OPTIMAL_TOL).collect()
        })
        .collect()
}

/// Whether `policy` only takes optimal actions in every non-terminal state it reaches.
pub fn is_optimal(mdp: &MdpSpec, policy: &TabularPolicy, optimal: &[Vec<usize>]) -> bool {
    reachable_states(mdp, policy)
        .iter()
        .enumerate()
        .filter(|(s, r)| **r && !mdp.is_terminal(*s))
        .all(|(s, _)| policy.support(s).iter().all(|a| optimal[s].contains(a)))
}

/// One evaluation + improvement round.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub q: QTable,
    pub policy: TabularPolicy,
    pub optimal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyIterationResult {
    pub policy: TabularPolicy,
    /// Improvement steps until the greedy policy first became optimal;
    /// `None` when it never did within the iteration limit.
    pub iterations_to_optimal: Option<usize>,
    pub trace: Vec<IterationRecord>,
}

/// Policy iteration from the uniform policy. With a statistic, evaluation uses
/// [`statistic_q`] (enumeration capped at `horizon` steps); otherwise the exact Q.
/// Stops once the greedy policy is optimal or stops changing.
pub fn policy_iteration(
    mdp: &MdpSpec,
    statistic: Option<Statistic>,
    max_iters: usize,
    horizon: usize,
) -> Result<PolicyIterationResult> {
    let (_, q_star) = value_iteration(mdp, 1e-12, 1_000_000)?;
    let optimal = optimal_action_sets(mdp, &q_star);
    let mut policy = TabularPolicy::uniform(mdp);
    let mut trace = Vec::new();
    if is_optimal(mdp, &policy, &optimal) {
        return Ok(PolicyIterationResult { policy, iterations_to_optimal: Some(0), trace });
    }
    let mut iterations_to_optimal = None;
    for iteration in 1..=max_iters {
        let q = match statistic {
            Some(stat) => statistic_q(mdp, &policy, stat, horizon)?,
            None => policy_evaluation(mdp, &policy)?.1,
        };
        let next = greedy_policy(&q);
        let done = is_optimal(mdp, &next, &optimal);
        let stalled = next == policy;
        trace.push(IterationRecord { iteration, q, policy: next.clone(), optimal: done });
        policy = next;
        if done {
            iterations_to_optimal = Some(iteration);
            break;
        }
        if stalled {
            break;
        }
    }
    Ok(PolicyIterationResult { policy, iterations_to_optimal, trace })
}
