//! Small hand-built MDPs illustrating how the max statistic biases action values.
//!
//! States are numbered from zero, so `s1` is state 0 and action `a1` is action 0.
//!
//! **fig1a** (deterministic, gamma 1):
//!
//! ```text
//! s1 --a1--> s2 (terminal, reward 0)
//! s1 --a2--> s3
//! s3 --a1--> s5 (terminal, reward -2)
//! s3 --a2--> s6 (terminal, reward +2)
//! s4: isolated terminal state, never reached
//! ```
//!
//! Under the uniform policy there are three trajectories with probabilities
//! 1/2, 1/4, 1/4.
//!
//! **fig1b** (stochastic transitions, gamma 1):
//!
//! ```text
//! s1 --a1--> s2 (terminal, reward 0.5)
//! s1 --a2--> s3 (reward +2)
//! s3 --any--> s4 (terminal, reward 0) with probability 1/2
//!          \-> s5 (terminal, reward -4) with probability 1/2
//! ```
//!
//! The max over partial returns credits `a2` with the lucky branch only.
//!
//! **fig1c(c)** (reward noise through chance states, gamma 1):
//!
//! ```text
//! s1 --a1--> p+ (reward +c) | p- (reward -c), each 1/2
//! p± --any--> q+ (terminal, reward +c) | q- (terminal, reward -c), each 1/2
//! s1 --a2--> z (terminal, reward 0)
//! ```
//!
//! ids: s1 = 0, p+ = 1, p- = 2, q+ = 3, q- = 4, z = 5.

use crate::env::{MdpBuilder, MdpSpec};
use crate::error::{Error, Result};

pub fn make_fig1a() -> MdpSpec {
    MdpBuilder::new(6, 2, 1.0)
        .transition(0, 0, 1, 1.0, 0.0)
        .transition(0, 1, 2, 1.0, 0.0)
        .transition(2, 0, 4, 1.0, -2.0)
        .transition(2, 1, 5, 1.0, 2.0)
        .terminal(1)
        .terminal(3)
        .terminal(4)
        .terminal(5)
        .start(0)
        .build()
        .expect("fig1a fixture is valid")
}

pub fn make_fig1b() -> MdpSpec {
    let mut b = MdpBuilder::new(5, 2, 1.0).transition(0, 0, 1, 1.0, 0.5).transition(0, 1, 2, 1.0, 2.0);
    for a in 0..2 {
        b = b.transition(2, a, 3, 0.5, 0.0).transition(2, a, 4, 0.5, -4.0);
    }
    b.terminal(1).terminal(3).terminal(4).start(0).build().expect("fig1b fixture is valid")
}

pub fn make_fig1c(noise_scale: f64) -> Result<MdpSpec> {
    if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise_scale must be finite and >= 0, got {noise_scale}")));
    }
    let c = noise_scale;
    let mut b = MdpBuilder::new(6, 2, 1.0)
        .transition(0, 0, 1, 0.5, c)
        .transition(0, 0, 2, 0.5, -c)
        .transition(0, 1, 5, 1.0, 0.0);
    for p in [1, 2] {
        for a in 0..2 {
            b = b.transition(p, a, 3, 0.5, c).transition(p, a, 4, 0.5, -c);
        }
    }
    b.terminal(3).terminal(4).terminal(5).start(0).build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_validate() {
        make_fig1a().validate().unwrap();
        make_fig1b().validate().unwrap();
        make_fig1c(1.0).unwrap().validate().unwrap();
        make_fig1c(0.0).unwrap().validate().unwrap();
        assert!(make_fig1c(-1.0).is_err());
    }

    #[test]
    fn fig1a_rewards() {
        let m = make_fig1a();
        assert_eq!(m.reward(2, 0, 4), -2.0);
        assert_eq!(m.reward(2, 1, 5), 2.0);
        let rewarded = (0..6)
            .flat_map(|s| (0..2).flat_map(move |a| (0..6).map(move |n| (s, a, n))))
            .filter(|&(s, a, n)| m.reward(s, a, n) != 0.0)
            .count();
        assert_eq!(rewarded, 2);
    }
}
