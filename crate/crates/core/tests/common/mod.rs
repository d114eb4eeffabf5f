//! Independent reference implementations used as test oracles.

#![allow(dead_code)]

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, dim), |_| rng.random_range(-5.0..5.0))
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-1.0..1.0);
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
    a
}

fn dist(x: ArrayView2<f64>, i: usize, j: usize) -> f64 {
    x.row(i)
        .iter()
        .zip(x.row(j))
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Per-point silhouette straight from the definition, one point at a time.
pub fn brute_silhouette(x: ArrayView2<f64>, labels: &[usize]) -> Vec<f64> {
    let n = labels.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let own = labels[i];
        let mates: Vec<usize> = (0..n).filter(|&j| j != i && labels[j] == own).collect();
        if mates.is_empty() {
            continue;
        }
        let a = mates.iter().map(|&j| dist(x, i, j)).sum::<f64>() / mates.len() as f64;
        let mut b = f64::INFINITY;
        let mut others: Vec<usize> = labels.iter().copied().filter(|&l| l != own).collect();
        others.sort_unstable();
        others.dedup();
        for c in others {
            let members: Vec<usize> = (0..n).filter(|&j| labels[j] == c).collect();
            let m = members.iter().map(|&j| dist(x, i, j)).sum::<f64>() / members.len() as f64;
            b = b.min(m);
        }
        let denom = a.max(b);
        out[i] = if denom == 0.0 { 0.0 } else { (b - a) / denom };
    }
    out
}

/// Minimum within-cluster sum of squares over every 2-partition with both
/// parts non-empty.
pub fn exhaustive_two_means(x: ArrayView2<f64>) -> f64 {
    let n = x.nrows();
    let mut best = f64::INFINITY;
    // fix point 0 in part A to skip mirrored masks
    for mask in 0u32..(1 << (n - 1)) {
        let in_b = |i: usize| i > 0 && (mask >> (i - 1)) & 1 == 1;
        let b_count = (0..n).filter(|&i| in_b(i)).count();
        if b_count == 0 || b_count == n {
            continue;
        }
        let sse = |part: bool| -> f64 {
            let idx: Vec<usize> = (0..n).filter(|&i| in_b(i) == part).collect();
            let dim = x.ncols();
            let mut centre = vec![0.0; dim];
            for &i in &idx {
                for d in 0..dim {
                    centre[d] += x[[i, d]];
                }
            }
            centre.iter_mut().for_each(|c| *c /= idx.len() as f64);
            idx.iter()
                .map(|&i| {
                    (0..dim)
                        .map(|d| (x[[i, d]] - centre[d]).powi(2))
                        .sum::<f64>()
                })
                .sum()
        };
        best = best.min(sse(false) + sse(true));
    }
    best
}

fn choose2(m: u64) -> f64 {
    (m * m.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index from the contingency table.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let index: f64 = table.iter().flatten().map(|&m| choose2(m)).sum();
    let rows: f64 = table.iter().map(|r| choose2(r.iter().sum())).sum();
    let cols: f64 = (0..kb)
        .map(|j| choose2(table.iter().map(|r| r[j]).sum()))
        .sum();
    let total = choose2(a.len() as u64);
    let expected = rows * cols / total;
    let max = (rows + cols) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Real roots of `x³ + b x² + c x + d` with three real roots, ascending,
/// via the trigonometric method.
pub fn cubic_roots(b: f64, c: f64, d: f64) -> [f64; 3] {
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let shift = -b / 3.0;
    if p.abs() < 1e-300 {
        let t = -q.cbrt();
        return [t + shift; 3];
    }
    let m = 2.0 * (-p / 3.0).sqrt();
    let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
    let theta = arg.acos() / 3.0;
    let mut r = [0.0; 3];
    for (k, slot) in r.iter_mut().enumerate() {
        *slot = m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift;
    }
    r.sort_by(f64::total_cmp);
    r
}

/// Coefficients (b, c, d) of det(xI − A) = x³ + b x² + c x + d for symmetric 3×3 A.
pub fn char_poly3(a: &Array2<f64>) -> (f64, f64, f64) {
    let trace = a[[0, 0]] + a[[1, 1]] + a[[2, 2]];
    let minors = a[[0, 0]] * a[[1, 1]] - a[[0, 1]] * a[[1, 0]] + a[[0, 0]] * a[[2, 2]]
        - a[[0, 2]] * a[[2, 0]]
        + a[[1, 1]] * a[[2, 2]]
        - a[[1, 2]] * a[[2, 1]];
    let det = a[[0, 0]] * (a[[1, 1]] * a[[2, 2]] - a[[1, 2]] * a[[2, 1]])
        - a[[0, 1]] * (a[[1, 0]] * a[[2, 2]] - a[[1, 2]] * a[[2, 0]])
        + a[[0, 2]] * (a[[1, 0]] * a[[2, 1]] - a[[1, 1]] * a[[2, 0]]);
    (-trace, minors, -det)
}

/// Block-diagonal affinity: `b` complete blocks of `size` points with unit
/// weights, no edges between blocks.
pub fn block_affinity(b: usize, size: usize) -> Array2<f64> {
    let n = b * size;
    Array2::from_shape_fn(
        (n, n),
        |(i, j)| if i / size == j / size { 1.0 } else { 0.0 },
    )
}

pub fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Prints the criterion line the acceptance target reports on.
pub fn report(id: &str, what: &str, pass: bool, detail: &str) -> bool {
    println!(
        "{} [{id}] {what}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}
