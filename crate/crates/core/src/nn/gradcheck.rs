use crate::error::{Error, Result};

/// Compares the analytic gradient returned by `f` against central differences.
///
/// Returns `max_i |analytic_i - numeric_i| / max(1, |analytic_i|)`.
pub fn finite_diff_check<F>(f: F, params: &[f64], epsilon: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} outside [1e-7, 1e-3]")));
    }
    let (_, analytic) = f(params);
    if analytic.len() != params.len() {
        return Err(Error::DimensionMismatch { expected: params.len(), got: analytic.len() });
    }
    let mut probe = params.to_vec();
    let mut worst = 0.0f64;
    for i in 0..params.len() {
        probe[i] = params[i] + epsilon;
        let up = f(&probe).0;
        probe[i] = params[i] - epsilon;
        let down = f(&probe).0;
        probe[i] = params[i];
        let numeric = (up - down) / (2.0 * epsilon);
        worst = worst.max((analytic[i] - numeric).abs() / analytic[i].abs().max(1.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let f = |p: &[f64]| {
            let v = p.iter().enumerate().map(|(i, x)| (i + 1) as f64 * x * x).sum();
            let g = p.iter().enumerate().map(|(i, x)| 2.0 * (i + 1) as f64 * x).collect();
            (v, g)
        };
        let err = finite_diff_check(f, &[0.3, -1.2, 2.5], 1e-5).unwrap();
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn wrong_gradient_is_caught() {
        let f = |p: &[f64]| (p[0] * p[0], vec![p[0]]);
        assert!(finite_diff_check(f, &[1.0], 1e-5).unwrap() > 0.4);
    }

    #[test]
    fn epsilon_range_enforced() {
        let f = |p: &[f64]| (p[0], vec![1.0]);
        assert!(finite_diff_check(f, &[1.0], 1e-2).is_err());
        assert!(finite_diff_check(f, &[1.0], 1e-9).is_err());
    }
}
