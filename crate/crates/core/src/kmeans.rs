//! k-means with k-means++ seeding, Lloyd iterations and restarts.
//!
//! Every restart draws from its own ChaCha8 stream keyed by
//! `(seed, restart_index)`, so results do not depend on how restarts are
//! scheduled. The best restart is the one with the lowest inertia, ties going
//! to the lower restart index.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

/// RNG used for seeding; one stream per restart.
pub type KMeansRng = ChaCha8Rng;

#[derive(Debug, Error, PartialEq)]
pub enum KMeansError {
    #[error("k = {k} outside 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("tolerance must be non-negative, got {0}")]
    NegativeTolerance(f64),
    #[error("restarts must be at least 1")]
    NoRestarts,
    #[error("max_iter must be at least 1")]
    NoIterations,
    #[error("input contains non-finite values")]
    NonFinite,
}

impl KMeansError {
    pub fn kind(&self) -> &'static str {
        match self {
            KMeansError::KOutOfRange { .. } => "KOutOfRange",
            KMeansError::NegativeTolerance(_) => "NegativeTolerance",
            KMeansError::NoRestarts => "NoRestarts",
            KMeansError::NoIterations => "NoIterations",
            KMeansError::NonFinite => "NonFinite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once no centroid coordinate moves by this much or more.
    pub tol: f64,
}

impl KMeansParams {
    pub const DEFAULT_SEED: u64 = 42;
    pub const DEFAULT_RESTARTS: usize = 20;
    pub const DEFAULT_MAX_ITER: usize = 300;
    pub const DEFAULT_TOL: f64 = 1e-9;

    pub fn new(k: usize) -> Self {
        KMeansParams {
            k,
            seed: Self::DEFAULT_SEED,
            restarts: Self::DEFAULT_RESTARTS,
            max_iter: Self::DEFAULT_MAX_ITER,
            tol: Self::DEFAULT_TOL,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    /// Cluster index in `0..k` for every row.
    pub labels: Vec<usize>,
    /// k×dim matrix of cluster means.
    pub centroids: Array2<f64>,
    /// Sum of squared distances from each row to its centroid.
    pub inertia: f64,
    pub seed: u64,
    /// Index of the restart that produced this result.
    pub best_restart: usize,
    pub restarts_used: usize,
    /// Lloyd iterations run by the winning restart.
    pub iterations: usize,
}

impl ClusteringResult {
    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// The RNG stream for one restart.
pub fn restart_rng(seed: u64, restart: usize) -> KMeansRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn row(points: &ArrayView2<f64>, i: usize) -> Vec<f64> {
    points.row(i).to_vec()
}

/// k-means++ seeding. Returns the chosen row indices in draw order.
///
/// The first row is uniform; each further row is drawn with probability
/// proportional to its squared distance from the nearest row already chosen.
/// If every remaining row coincides with a chosen one, the draw falls back to
/// uniform over the rows not yet picked.
pub fn kmeanspp_init(points: ArrayView2<f64>, k: usize, rng: &mut KMeansRng) -> Vec<usize> {
    let n = points.nrows();
    assert!(k >= 1 && k <= n, "k must be in 1..=n");
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    let first = rng.random_range(0..n);
    chosen.push(first);
    taken[first] = true;

    let mut nearest: Vec<f64> = (0..n)
        .map(|i| sq_dist(&row(&points, i), &row(&points, first)))
        .collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            let mut last_positive = 0;
            for (i, &w) in nearest.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                last_positive = i;
                acc += w;
                if acc > target {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or(last_positive)
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        taken[next] = true;
        let c = row(&points, next);
        for (i, w) in nearest.iter_mut().enumerate() {
            *w = w.min(sq_dist(&row(&points, i), &c));
        }
    }
    chosen
}

struct Run {
    labels: Vec<usize>,
    centroids: Array2<f64>,
    inertia: f64,
    iterations: usize,
}

/// Nearest centroid; distance ties go to the lowest index.
fn nearest_centroid(p: &[f64], centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.rows().into_iter().enumerate() {
        let d = p
            .iter()
            .zip(c.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>();
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn means(points: &ArrayView2<f64>, labels: &[usize], k: usize) -> Array2<f64> {
    let mut sums = Array2::zeros((k, points.ncols()));
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        let mut s = sums.row_mut(l);
        s += &points.row(i);
    }
    for (mut s, &c) in sums.rows_mut().into_iter().zip(&counts) {
        if c > 0 {
            s /= c as f64;
        }
    }
    sums
}

fn inertia_of(points: &ArrayView2<f64>, labels: &[usize], centroids: &Array2<f64>) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            points
                .row(i)
                .iter()
                .zip(centroids.row(l))
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
        })
        .sum()
}

/// Moves the point farthest from its centroid (among clusters with more than
/// one member) into each empty cluster, lowest empty index first.
fn repair_empty(labels: &mut [usize], dist: &mut [f64], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let mut donor = None;
        for (i, &d) in dist.iter().enumerate() {
            if counts[labels[i]] > 1 && donor.is_none_or(|(_, best)| d > best) {
                donor = Some((i, d));
            }
        }
        let Some((i, _)) = donor else { return };
        labels[i] = empty;
        dist[i] = 0.0;
    }
}

fn lloyd(points: &ArrayView2<f64>, init: Array2<f64>, max_iter: usize, tol: f64) -> Run {
    let n = points.nrows();
    let k = init.nrows();
    let mut centroids = init;
    let mut labels = vec![usize::MAX; n];
    let mut dist = vec![0.0; n];
    let mut iterations = 0;
    #[cfg(debug_assertions)]
    let mut previous_inertia = f64::INFINITY;

    while iterations < max_iter {
        iterations += 1;
        let mut changed = false;
        for i in 0..n {
            let (j, d) = nearest_centroid(&row(points, i), &centroids);
            if labels[i] != j {
                changed = true;
                labels[i] = j;
            }
            dist[i] = d;
        }
        let before = labels.clone();
        repair_empty(&mut labels, &mut dist, k);
        changed |= before != labels;

        let updated = means(points, &labels, k);
        let movement = updated
            .iter()
            .zip(centroids.iter())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        centroids = updated;

        #[cfg(debug_assertions)]
        {
            let current = inertia_of(points, &labels, &centroids);
            debug_assert!(
                current <= previous_inertia * (1.0 + 1e-12) + 1e-12,
                "inertia increased: {previous_inertia} -> {current}"
            );
            previous_inertia = current;
        }

        if !changed || movement < tol {
            break;
        }
    }

    let inertia = inertia_of(points, &labels, &centroids);
    Run {
        labels,
        centroids,
        inertia,
        iterations,
    }
}

/// Clusters the rows of `points` into `params.k` groups.
pub fn kmeans(
    points: ArrayView2<f64>,
    params: &KMeansParams,
) -> Result<ClusteringResult, KMeansError> {
    let n = points.nrows();
    if params.k == 0 || params.k > n {
        return Err(KMeansError::KOutOfRange { k: params.k, n });
    }
    if params.tol.is_nan() || params.tol < 0.0 {
        return Err(KMeansError::NegativeTolerance(params.tol));
    }
    if params.restarts == 0 {
        return Err(KMeansError::NoRestarts);
    }
    if params.max_iter == 0 {
        return Err(KMeansError::NoIterations);
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(KMeansError::NonFinite);
    }

    let mut best: Option<(usize, Run)> = None;
    for restart in 0..params.restarts {
        let mut rng = restart_rng(params.seed, restart);
        let seeds = kmeanspp_init(points, params.k, &mut rng);
        let mut init = Array2::zeros((params.k, points.ncols()));
        for (j, &i) in seeds.iter().enumerate() {
            init.row_mut(j).assign(&points.row(i));
        }
        let run = lloyd(&points, init, params.max_iter, params.tol);
        if best.as_ref().is_none_or(|(_, b)| run.inertia < b.inertia) {
            best = Some((restart, run));
        }
    }
    let (best_restart, run) = best.expect("at least one restart");
    Ok(ClusteringResult {
        labels: run.labels,
        centroids: run.centroids,
        inertia: run.inertia,
        seed: params.seed,
        best_restart,
        restarts_used: params.restarts,
        iterations: run.iterations,
    })
}
