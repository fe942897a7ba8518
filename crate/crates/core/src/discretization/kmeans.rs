//! Lloyd's k-means over fixed-length series with k-means++ seeding.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Series, STEPS};
use crate::rng::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub max_iter: usize,
    /// Independent k-means++ initializations; the lowest-inertia run wins.
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            max_iter: 300,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<Series>,
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Inertia after every assignment step of the winning run.
    pub inertia_trace: Vec<f64>,
}

pub fn squared_distance(a: &Series, b: &Series) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; ties go to the lowest index.
pub fn nearest(point: &Series, centroids: &[Series]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

pub fn kmeans(series: &[Series], k: usize, seed: u64) -> Result<KMeansFit> {
    kmeans_with(series, k, seed, &KMeansConfig::default())
}

pub fn kmeans_with(series: &[Series], k: usize, seed: u64, config: &KMeansConfig) -> Result<KMeansFit> {
    if series.is_empty() {
        return Err(Error::domain("k-means on an empty set"));
    }
    if k == 0 {
        return Err(Error::domain("k-means with k = 0"));
    }
    if k > series.len() {
        return Err(Error::domain(format!(
            "k-means with k = {k} exceeds {} series",
            series.len()
        )));
    }
    if series.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("k-means input"));
    }

    let mut best: Option<KMeansFit> = None;
    for restart in 0..config.restarts.max(1) {
        let mut rng = rng_for(seed, restart as u64);
        let fit = lloyd(series, k, config.max_iter, &mut rng);
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn plus_plus(series: &[Series], k: usize, rng: &mut ChaCha8Rng) -> Vec<Series> {
    let n = series.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![series[first]];
    let mut d2: Vec<f64> = series.iter().map(|s| squared_distance(s, &series[first])).collect();

    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, d) in d2.iter().enumerate() {
                acc += d;
                if *d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave the scan short of `target`.
            pick.unwrap_or_else(|| d2.iter().rposition(|d| *d > 0.0).unwrap())
        } else {
            // All remaining points coincide with a centroid.
            let free: Vec<usize> = (0..n).filter(|i| !chosen[*i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        let c = series[pick];
        for (d, s) in d2.iter_mut().zip(series) {
            *d = d.min(squared_distance(s, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Assigns every point, then reseeds each empty cluster at the point
/// farthest from its centroid. Returns inertia and whether a repair happened.
fn assign_step(series: &[Series], centroids: &mut [Series], labels: &mut [usize], dist: &mut [f64]) -> (f64, bool) {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for (i, s) in series.iter().enumerate() {
        let (j, d) = nearest(s, centroids);
        labels[i] = j;
        dist[i] = d;
        sizes[j] += 1;
    }

    let mut repaired = false;
    while let Some(empty) = sizes.iter().position(|&c| c == 0) {
        // Farthest point from its own centroid among clusters that can spare one.
        let mut far: Option<(usize, f64)> = None;
        for (i, d) in dist.iter().enumerate() {
            if sizes[labels[i]] > 1 && far.is_none_or(|(_, fd)| *d > fd) {
                far = Some((i, *d));
            }
        }
        let (i, _) = far.expect("k <= n guarantees a donor cluster");
        sizes[labels[i]] -= 1;
        centroids[empty] = series[i];
        labels[i] = empty;
        dist[i] = 0.0;
        sizes[empty] = 1;
        repaired = true;
    }
    (dist.iter().sum(), repaired)
}

fn update_means(series: &[Series], labels: &[usize], k: usize) -> Vec<Series> {
    let mut sums = vec![[0.0; STEPS]; k];
    let mut counts = vec![0usize; k];
    for (s, &l) in series.iter().zip(labels) {
        counts[l] += 1;
        for (acc, v) in sums[l].iter_mut().zip(s) {
            *acc += v;
        }
    }
    for (sum, n) in sums.iter_mut().zip(&counts) {
        let n = *n as f64;
        for v in sum.iter_mut() {
            *v /= n;
        }
    }
    sums
}

fn lloyd(series: &[Series], k: usize, max_iter: usize, rng: &mut ChaCha8Rng) -> KMeansFit {
    let n = series.len();
    let mut centroids = plus_plus(series, k, rng);
    let mut labels = vec![0; n];
    let mut dist = vec![0.0; n];
    let (inertia, _) = assign_step(series, &mut centroids, &mut labels, &mut dist);
    let mut trace = vec![inertia];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let mut next_centroids = update_means(series, &labels, k);
        let mut next_labels = vec![0; n];
        let (inertia, _) = assign_step(series, &mut next_centroids, &mut next_labels, &mut dist);
        trace.push(inertia);
        // Unchanged labels reproduce the same means, repaired or not.
        let stable = next_labels == labels;
        centroids = next_centroids;
        labels = next_labels;
        if stable {
            converged = true;
            break;
        }
    }

    KMeansFit {
        inertia: *trace.last().unwrap(),
        centroids,
        labels,
        iterations,
        converged,
        inertia_trace: trace,
    }
}
