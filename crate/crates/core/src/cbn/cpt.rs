use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Counts and probabilities for one observed parent configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptRow {
    pub parent_values: Vec<usize>,
    /// Training rows with this parent configuration, n(u).
    pub n: u64,
    /// Per-state counts, count(x, u).
    pub counts: Vec<u64>,
    pub probs: Vec<f64>,
}

/// Conditional probability table of one node. Only observed parent
/// configurations are stored; every other configuration reads as uniform
/// with zero support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptTable {
    pub node: String,
    pub cardinality: usize,
    pub parents: Vec<String>,
    pub parent_cardinalities: Vec<usize>,
    /// Sorted by `parent_values`.
    pub rows: Vec<CptRow>,
}

impl CptTable {
    pub(crate) fn from_counts(
        node: String,
        cardinality: usize,
        parents: Vec<String>,
        parent_cardinalities: Vec<usize>,
        mut observed: Vec<(Vec<usize>, Vec<u64>)>,
        alpha: f64,
    ) -> Self {
        observed.sort_by(|a, b| a.0.cmp(&b.0));
        let rows = observed
            .into_iter()
            .map(|(parent_values, counts)| {
                let n: u64 = counts.iter().sum();
                let probs = smoothed(&counts, alpha);
                CptRow {
                    parent_values,
                    n,
                    counts,
                    probs,
                }
            })
            .collect();
        Self {
            node,
            cardinality,
            parents,
            parent_cardinalities,
            rows,
        }
    }

    pub(crate) fn check_rows(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::schema(format!("CPT for `{}`: {msg}", self.node)));
        if self.rows.windows(2).any(|w| w[0].parent_values >= w[1].parent_values) {
            return bad("rows must be sorted by parent values without duplicates".into());
        }
        for row in &self.rows {
            let in_range = row.parent_values.len() == self.parent_cardinalities.len()
                && row.parent_values.iter().zip(&self.parent_cardinalities).all(|(v, k)| v < k);
            if !in_range {
                return bad(format!("parent values {:?} out of range", row.parent_values));
            }
            if row.probs.len() != self.cardinality || row.counts.len() != self.cardinality {
                return bad(format!("row {:?} has the wrong number of states", row.parent_values));
            }
            let sum: f64 = row.probs.iter().sum();
            if row.probs.iter().any(|p| p.is_nan() || *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return bad(format!("row {:?} is not a distribution", row.parent_values));
            }
        }
        Ok(())
    }

    pub fn row(&self, parent_values: &[usize]) -> Option<&CptRow> {
        self.rows
            .binary_search_by(|r| r.parent_values.as_slice().cmp(parent_values))
            .ok()
            .map(|i| &self.rows[i])
    }

    /// n(u): raw number of training rows with this parent configuration.
    pub fn count(&self, parent_values: &[usize]) -> u64 {
        self.row(parent_values).map_or(0, |r| r.n)
    }

    /// theta_{x|u}.
    pub fn prob(&self, state: usize, parent_values: &[usize]) -> f64 {
        match self.row(parent_values) {
            Some(r) => r.probs[state],
            None => 1.0 / self.cardinality as f64,
        }
    }

    /// Full distribution for a parent configuration; unseen rows are uniform.
    pub fn distribution(&self, parent_values: &[usize]) -> Vec<f64> {
        match self.row(parent_values) {
            Some(r) => r.probs.clone(),
            None => vec![1.0 / self.cardinality as f64; self.cardinality],
        }
    }

    pub fn total_count(&self) -> u64 {
        self.rows.iter().map(|r| r.n).sum()
    }

    pub fn configurations(&self) -> usize {
        self.parent_cardinalities.iter().product()
    }
}

/// (count + alpha) / (n + alpha * K), uniform when the denominator is zero.
pub(crate) fn smoothed(counts: &[u64], alpha: f64) -> Vec<f64> {
    let k = counts.len() as f64;
    let n: u64 = counts.iter().sum();
    let denom = n as f64 + alpha * k;
    if denom <= 0.0 {
        return vec![1.0 / k; counts.len()];
    }
    counts.iter().map(|&c| (c as f64 + alpha) / denom).collect()
}
