//! Small-sample summaries and the paired sign test.

use serde::{Deserialize, Serialize};

/// Linear-interpolation quantile of sorted data (`q` in `[0, 1]`).
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(xs: &[f64]) -> f64 {
    quantile_sorted(&sorted(xs), 0.5)
}

/// Median and quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Spread {
    pub fn of(xs: &[f64]) -> Self {
        let s = sorted(xs);
        Self { median: quantile_sorted(&s, 0.5), q1: quantile_sorted(&s, 0.25), q3: quantile_sorted(&s, 0.75) }
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Exact two-sided sign test on paired differences; zero differences are dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignTest {
    pub positive: usize,
    pub negative: usize,
    pub ties: usize,
    pub p_value: f64,
}

pub fn sign_test(diffs: &[f64]) -> SignTest {
    let positive = diffs.iter().filter(|d| **d > 0.0).count();
    let negative = diffs.iter().filter(|d| **d < 0.0).count();
    let ties = diffs.len() - positive - negative;
    SignTest { positive, negative, ties, p_value: binomial_two_sided(positive + negative, positive.min(negative)) }
}

/// `P(X <= k) + P(X >= n - k)` for `X ~ Binomial(n, 1/2)`, capped at 1.
fn binomial_two_sided(n: usize, k: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut term = 0.5f64.powi(n as i32);
    let mut tail = term;
    for i in 1..=k {
        term *= (n - i + 1) as f64 / i as f64;
        tail += term;
    }
    (2.0 * tail).min(1.0)
}
