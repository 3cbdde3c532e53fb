//! Exact tabular MDPs and their plain-text serialization.
//!
//! Text format (`#` starts a comment line):
//!
//! ```text
//! n_states 6
//! n_actions 2
//! gamma 1
//! terminals 1 3 4 5
//! initial 1 0 0 0 0 0
//! # s a s' prob reward
//! 0 0 1 1 0
//! 0 1 2 1 0
//! ```
//!
//! `terminals` may be empty. `initial` lists one probability per state. Every
//! transition with nonzero probability or nonzero reward is written, one per
//! line, so a save/load round trip reproduces both tables exactly. Reals are
//! written in Rust's shortest round-trip decimal form.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-12;

/// A finite MDP with rewards on `(s, a, s')` and explicit terminal states.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpSpec {
    n_states: usize,
    n_actions: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
    terminal: Vec<bool>,
    gamma: f64,
    initial: Vec<f64>,
}

/// Incremental constructor for [`MdpSpec`]; validation happens in [`MdpBuilder::build`].
#[derive(Debug, Clone)]
pub struct MdpBuilder {
    spec: MdpSpec,
}

impl MdpBuilder {
    pub fn new(n_states: usize, n_actions: usize, gamma: f64) -> Self {
        let cells = n_states * n_actions * n_states;
        Self {
            spec: MdpSpec {
                n_states,
                n_actions,
                transition: vec![0.0; cells],
                reward: vec![0.0; cells],
                terminal: vec![false; n_states],
                gamma,
                initial: vec![0.0; n_states],
            },
        }
    }

    /// Adds `prob` to P(next | state, action) and sets R(state, action, next).
    pub fn transition(mut self, state: usize, action: usize, next: usize, prob: f64, reward: f64) -> Self {
        let i = self.spec.index(state, action, next);
        self.spec.transition[i] += prob;
        self.spec.reward[i] = reward;
        self
    }

    pub fn terminal(mut self, state: usize) -> Self {
        self.spec.terminal[state] = true;
        self
    }

    pub fn start(mut self, state: usize) -> Self {
        self.spec.initial.iter_mut().for_each(|p| *p = 0.0);
        self.spec.initial[state] = 1.0;
        self
    }

    pub fn initial(mut self, dist: Vec<f64>) -> Self {
        self.spec.initial = dist;
        self
    }

    pub fn build(self) -> Result<MdpSpec> {
        self.spec.validate()?;
        Ok(self.spec)
    }
}

impl MdpSpec {
    #[inline]
    fn index(&self, s: usize, a: usize, next: usize) -> usize {
        (s * self.n_actions + a) * self.n_states + next
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn terminals(&self) -> &[bool] {
        &self.terminal
    }

    pub fn initial_distribution(&self) -> &[f64] {
        &self.initial
    }

    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transition[self.index(s, a, next)]
    }

    pub fn reward(&self, s: usize, a: usize, next: usize) -> f64 {
        self.reward[self.index(s, a, next)]
    }

    /// Transition row P(· | s, a).
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = self.index(s, a, 0);
        &self.transition[start..start + self.n_states]
    }

    /// Reward row R(s, a, ·).
    pub fn reward_row(&self, s: usize, a: usize) -> &[f64] {
        let start = self.index(s, a, 0);
        &self.reward[start..start + self.n_states]
    }

    /// Successors of `(s, a)` with positive probability, as `(next, prob, reward)`.
    pub fn successors(&self, s: usize, a: usize) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let probs = self.row(s, a);
        let rewards = self.reward_row(s, a);
        probs.iter().zip(rewards).enumerate().filter(|(_, (p, _))| **p > 0.0).map(|(n, (p, r))| (n, *p, *r))
    }

    /// Expected immediate reward of `(s, a)`.
    pub fn expected_reward(&self, s: usize, a: usize) -> f64 {
        self.successors(s, a).map(|(_, p, r)| p * r).sum()
    }

    /// Draws a successor of `(s, a)`.
    pub fn sample_next(&self, s: usize, a: usize, rng: &mut dyn RngCore) -> usize {
        sample_categorical(self.row(s, a), rng)
    }

    pub fn sample_initial(&self, rng: &mut dyn RngCore) -> usize {
        sample_categorical(&self.initial, rng)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidMdp(m));
        if self.n_states == 0 || self.n_actions == 0 {
            return bad("need at least one state and one action".into());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma {} not in (0, 1]", self.gamma));
        }
        if self.initial.len() != self.n_states {
            return bad("initial distribution has wrong length".into());
        }
        if self.initial.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("initial distribution entry outside [0, 1]".into());
        }
        let total: f64 = self.initial.iter().sum();
        if (total - 1.0).abs() > STOCHASTIC_TOL {
            return bad(format!("initial distribution sums to {total}"));
        }
        if self.reward.iter().any(|r| !r.is_finite()) {
            return bad("non-finite reward".into());
        }
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let row = self.row(s, a);
                if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return bad(format!("transition ({s}, {a}) has entry outside [0, 1]"));
                }
                if self.terminal[s] {
                    continue;
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > STOCHASTIC_TOL {
                    return bad(format!("transition row ({s}, {a}) sums to {sum}"));
                }
            }
        }
        Ok(())
    }

    /// Serializes to the plain-text tabular format described in the module docs.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n_states {}", self.n_states);
        let _ = writeln!(out, "n_actions {}", self.n_actions);
        let _ = writeln!(out, "gamma {}", self.gamma);
        out.push_str("terminals");
        for (s, t) in self.terminal.iter().enumerate() {
            if *t {
                let _ = write!(out, " {s}");
            }
        }
        out.push('\n');
        out.push_str("initial");
        for p in &self.initial {
            let _ = write!(out, " {p}");
        }
        out.push('\n');
        out.push_str("# s a s' prob reward\n");
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                for n in 0..self.n_states {
                    let (p, r) = (self.prob(s, a, n), self.reward(s, a, n));
                    if p != 0.0 || r != 0.0 {
                        let _ = writeln!(out, "{s} {a} {n} {p} {r}");
                    }
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut header: [Option<f64>; 3] = [None; 3];
        let mut terminals: Option<Vec<usize>> = None;
        let mut initial: Option<Vec<f64>> = None;
        let mut rows: Vec<(usize, [f64; 5])> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| Error::Parse { line: line_no, message: m };
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap_or_default();
            let rest: Vec<&str> = parts.collect();
            let num = |tok: &str| tok.parse::<f64>().map_err(|_| err(format!("not a number: `{tok}`")));
            match head {
                "n_states" | "n_actions" | "gamma" => {
                    if rest.len() != 1 {
                        return Err(err(format!("`{head}` takes one value")));
                    }
                    let slot = match head {
                        "n_states" => 0,
                        "n_actions" => 1,
                        _ => 2,
                    };
                    header[slot] = Some(num(rest[0])?);
                }
                "terminals" => {
                    let ids = rest
                        .iter()
                        .map(|t| t.parse::<usize>().map_err(|_| err(format!("bad state id `{t}`"))))
                        .collect::<Result<Vec<_>>>()?;
                    terminals = Some(ids);
                }
                "initial" => {
                    initial = Some(rest.iter().map(|t| num(t)).collect::<Result<Vec<_>>>()?);
                }
                _ => {
                    if rest.len() != 4 {
                        return Err(err("transition lines need 5 fields: s a s' prob reward".into()));
                    }
                    let mut vals = [0.0; 5];
                    vals[0] = num(head)?;
                    for (k, tok) in rest.iter().enumerate() {
                        vals[k + 1] = num(tok)?;
                    }
                    rows.push((line_no, vals));
                }
            }
        }

        let missing = |what: &str| Error::Parse { line: 0, message: format!("missing `{what}` header") };
        let n_states = header[0].ok_or_else(|| missing("n_states"))? as usize;
        let n_actions = header[1].ok_or_else(|| missing("n_actions"))? as usize;
        let gamma = header[2].ok_or_else(|| missing("gamma"))?;
        let mut builder = MdpBuilder::new(n_states, n_actions, gamma);
        for s in terminals.ok_or_else(|| missing("terminals"))? {
            if s >= n_states {
                return Err(Error::InvalidMdp(format!("terminal state {s} out of range")));
            }
            builder = builder.terminal(s);
        }
        let initial = initial.ok_or_else(|| missing("initial"))?;
        if initial.len() != n_states {
            return Err(Error::InvalidMdp("initial distribution has wrong length".into()));
        }
        builder = builder.initial(initial);
        for (line, [s, a, n, p, r]) in rows {
            let (s, a, n) = (s as usize, a as usize, n as usize);
            if s >= n_states || a >= n_actions || n >= n_states {
                return Err(Error::Parse { line, message: "index out of range".into() });
            }
            let i = builder.spec.index(s, a, n);
            builder.spec.transition[i] = p;
            builder.spec.reward[i] = r;
        }
        builder.build()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Inverse-CDF draw from a probability vector; falls back to the last positive entry on rounding.
pub(crate) fn sample_categorical(probs: &[f64], rng: &mut dyn RngCore) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}
