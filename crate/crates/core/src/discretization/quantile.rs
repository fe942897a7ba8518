//! Equal-frequency binning of scalar variables.

use crate::error::{Error, Result};

/// Cut points at probabilities `1/k, 2/k, ..., (k-1)/k` using linear
/// interpolation between order statistics. Edges are non-decreasing; callers
/// that need strictly ascending edges should deduplicate.
pub fn quantile_edges(values: &[f64], k: usize) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(Error::domain(format!("quantile binning needs k >= 2, got {k}")));
    }
    if values.len() < k {
        return Err(Error::domain(format!(
            "quantile binning into {k} bins needs at least {k} values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("quantile input"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(Error::DegenerateEdges(sorted[0]));
    }
    let last = (sorted.len() - 1) as f64;
    Ok((1..k)
        .map(|j| {
            let pos = last * j as f64 / k as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(sorted.len() - 1);
            let w = pos - lo as f64;
            sorted[lo] + w * (sorted[hi] - sorted[lo])
        })
        .collect())
}

/// Bin of `value`: the number of edges at or below it. Values under the
/// first edge fall in bin 0 and values at or above the last in the top bin.
pub fn bin_index(edges: &[f64], value: f64) -> usize {
    edges.partition_point(|e| *e <= value)
}
