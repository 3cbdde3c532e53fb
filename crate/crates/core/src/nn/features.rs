/// Fixed map from state id to a feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureEncoding {
    dim: usize,
    table: Vec<f64>,
}

impl FeatureEncoding {
    pub fn one_hot(n_states: usize) -> Self {
        let mut table = vec![0.0; n_states * n_states];
        for s in 0..n_states {
            table[s * n_states + s] = 1.0;
        }
        Self { dim: n_states, table }
    }

    /// One row per state; all rows must share a length.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == dim), "feature rows must share a dimension");
        Self { dim, table: rows.into_iter().flatten().collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_states(&self) -> usize {
        self.table.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn features(&self, state: usize) -> &[f64] {
        &self.table[state * self.dim..(state + 1) * self.dim]
    }
}
