//! Paired comparison of two run directories.

use std::fmt::Write;
use std::path::Path;

use crate::error::{HarnessError, Result};
use crate::records::{read_csv, SeedRecord};
use crate::run::load_config;
use crate::stats::{sign_test, SignTest, Spread};

/// Medians, quartiles and sign tests of run B against run A. Differences are B - A
/// paired by seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub name_a: String,
    pub name_b: String,
    pub env: String,
    pub seeds: Vec<u64>,
    pub final_a: Spread,
    pub final_b: Spread,
    pub final_test: SignTest,
    pub first_a: Spread,
    pub first_b: Spread,
    pub first_test: SignTest,
}

fn load_summary(dir: &Path) -> Result<Vec<SeedRecord>> {
    Ok(read_csv(&dir.join("summary.csv"))?.1)
}

/// Compares two training summaries paired by seed.
pub fn compare_summaries(a: &[SeedRecord], b: &[SeedRecord]) -> Result<(Vec<u64>, [Spread; 4], SignTest, SignTest)> {
    if a.len() != b.len() {
        return Err(HarnessError::Config(format!("runs have {} and {} seeds", a.len(), b.len())));
    }
    let mut seeds = Vec::new();
    let mut pairs = Vec::new();
    for ra in a {
        let rb = b
            .iter()
            .find(|r| r.seed == ra.seed)
            .ok_or_else(|| HarnessError::Config(format!("seed {} is missing from the second run", ra.seed)))?;
        seeds.push(ra.seed);
        pairs.push((ra, rb));
    }
    let fa: Vec<f64> = pairs.iter().map(|(x, _)| x.final_return).collect();
    let fb: Vec<f64> = pairs.iter().map(|(_, y)| y.final_return).collect();
    let sa: Vec<f64> = pairs.iter().map(|(x, _)| x.first_success as f64).collect();
    let sb: Vec<f64> = pairs.iter().map(|(_, y)| y.first_success as f64).collect();
    let diff = |x: &[f64], y: &[f64]| y.iter().zip(x).map(|(b, a)| b - a).collect::<Vec<_>>();
    Ok((
        seeds,
        [Spread::of(&fa), Spread::of(&fb), Spread::of(&sa), Spread::of(&sb)],
        sign_test(&diff(&fa, &fb)),
        sign_test(&diff(&sa, &sb)),
    ))
}

pub fn compare(a: &Path, b: &Path) -> Result<Comparison> {
    let ca = load_config(a)?;
    let cb = load_config(b)?;
    if ca.env != cb.env {
        return Err(HarnessError::Config(format!(
            "runs used different environments (`{}` vs `{}` or different parameters)",
            ca.env.name, cb.env.name
        )));
    }
    let (seeds, [final_a, final_b, first_a, first_b], final_test, first_test) =
        compare_summaries(&load_summary(a)?, &load_summary(b)?)?;
    Ok(Comparison {
        name_a: ca.experiment.name,
        name_b: cb.experiment.name,
        env: ca.env.name,
        seeds,
        final_a,
        final_b,
        final_test,
        first_a,
        first_b,
        first_test,
    })
}

impl Comparison {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "env {}, {} paired seeds", self.env, self.seeds.len());
        let _ = writeln!(s, "A = {}\nB = {}", self.name_a, self.name_b);
        let mut block = |title: &str, a: &Spread, b: &Spread, t: &SignTest| {
            let _ = writeln!(s, "\n{title}");
            let _ = writeln!(s, "  A median {:.4}  IQR [{:.4}, {:.4}]", a.median, a.q1, a.q3);
            let _ = writeln!(s, "  B median {:.4}  IQR [{:.4}, {:.4}]", b.median, b.q1, b.q3);
            let _ = writeln!(
                s,
                "  B - A: {} higher, {} lower, {} tied; sign test p = {:.6}",
                t.positive, t.negative, t.ties, t.p_value
            );
        };
        block("final mean return", &self.final_a, &self.final_b, &self.final_test);
        block("updates to first success (censored at run length)", &self.first_a, &self.first_b, &self.first_test);
        s
    }
}
