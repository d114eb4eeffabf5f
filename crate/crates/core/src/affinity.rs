//! Gaussian-kernel similarity matrices.

use ndarray::{Array2, ArrayView2};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AffinityError {
    #[error("kernel bandwidth must be positive and finite, got {0}")]
    NonPositiveSigma(f64),
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("all pairwise distances are zero")]
    DegenerateData,
    #[error("k = {k} outside 1..={max}")]
    KOutOfRange { k: usize, max: usize },
}

impl AffinityError {
    pub fn kind(&self) -> &'static str {
        match self {
            AffinityError::NonPositiveSigma(_) => "NonPositiveSigma",
            AffinityError::TooFewRows(_) => "TooFewRows",
            AffinityError::DegenerateData => "DegenerateData",
            AffinityError::KOutOfRange { .. } => "KOutOfRange",
        }
    }
}

/// Symmetric n×n affinity with unit diagonal and entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    matrix: Array2<f64>,
    sigma: f64,
    sparsified_k: Option<usize>,
}

impl SimilarityMatrix {
    /// Wraps a precomputed affinity after checking the invariants: square,
    /// exactly symmetric, unit diagonal, entries in `[0, 1]`.
    pub fn from_matrix(matrix: Array2<f64>, sigma: f64) -> Result<Self, String> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(format!("matrix is {}x{}", n, matrix.ncols()));
        }
        for i in 0..n {
            if matrix[[i, i]] != 1.0 {
                return Err(format!("diagonal entry {i} is {}", matrix[[i, i]]));
            }
            for j in 0..n {
                let v = matrix[[i, j]];
                if !(0.0..=1.0).contains(&v) {
                    return Err(format!("entry ({i},{j}) = {v} outside [0,1]"));
                }
                if v != matrix[[j, i]] {
                    return Err(format!("entry ({i},{j}) is not symmetric"));
                }
            }
        }
        Ok(SimilarityMatrix {
            matrix,
            sigma,
            sparsified_k: None,
        })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sparsified_k(&self) -> Option<usize> {
        self.sparsified_k
    }
}

fn squared_distance(points: &ArrayView2<f64>, i: usize, j: usize) -> f64 {
    points
        .row(i)
        .iter()
        .zip(points.row(j))
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// `S_ij = exp(-‖x_i − x_j‖² / (2σ²))`, evaluated once per unordered pair and
/// mirrored. Results below the smallest normal `f64` are stored as 0.
pub fn gaussian_similarity(
    points: ArrayView2<f64>,
    sigma: f64,
) -> Result<SimilarityMatrix, AffinityError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(AffinityError::NonPositiveSigma(sigma));
    }
    let n = points.nrows();
    if n < 2 {
        return Err(AffinityError::TooFewRows(n));
    }
    let denom = 2.0 * sigma * sigma;
    let mut s = Array2::eye(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut v = (-squared_distance(&points, i, j) / denom).exp();
            if v < f64::MIN_POSITIVE {
                v = 0.0;
            }
            s[[i, j]] = v;
            s[[j, i]] = v;
        }
    }
    Ok(SimilarityMatrix {
        matrix: s,
        sigma,
        sparsified_k: None,
    })
}

/// Median of all pairwise Euclidean distances, the default kernel bandwidth.
///
/// When more than half of the pairs coincide the median is 0; the median of
/// the positive distances is returned instead so the bandwidth stays usable.
pub fn median_heuristic_sigma(points: ArrayView2<f64>) -> Result<f64, AffinityError> {
    let n = points.nrows();
    if n < 2 {
        return Err(AffinityError::TooFewRows(n));
    }
    let mut d = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d.push(squared_distance(&points, i, j).sqrt());
        }
    }
    let m = crate::dataset::median(&d);
    if m > 0.0 {
        return Ok(m);
    }
    let positive: Vec<f64> = d.into_iter().filter(|&v| v > 0.0).collect();
    if positive.is_empty() {
        return Err(AffinityError::DegenerateData);
    }
    Ok(crate::dataset::median(&positive))
}

/// Keeps edge (i, j) when j is among the `k` most similar neighbours of i or
/// i is among the `k` most similar of j; zeroes every other off-diagonal
/// entry. Similarity ties go to the lower index.
pub fn knn_sparsify(s: &SimilarityMatrix, k: usize) -> Result<SimilarityMatrix, AffinityError> {
    let n = s.n();
    if k == 0 || k + 1 > n {
        return Err(AffinityError::KOutOfRange {
            k,
            max: n.saturating_sub(1),
        });
    }
    let m = &s.matrix;
    let mut keep = Array2::from_elem((n, n), false);
    let mut order: Vec<usize> = Vec::with_capacity(n - 1);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&a, &b| m[[i, b]].total_cmp(&m[[i, a]]).then(a.cmp(&b)));
        for &j in &order[..k] {
            keep[[i, j]] = true;
            keep[[j, i]] = true;
        }
    }
    let mut out = m.clone();
    for i in 0..n {
        for j in 0..n {
            if i != j && !keep[[i, j]] {
                out[[i, j]] = 0.0;
            }
        }
    }
    Ok(SimilarityMatrix {
        matrix: out,
        sigma: s.sigma,
        sparsified_k: Some(k),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn kernel_values() {
        let sigma = 0.7;
        let d = sigma * 2f64.sqrt();
        let x = array![[1.0, 1.0], [1.0, 1.0], [1.0 + d, 1.0]];
        let s = gaussian_similarity(x.view(), sigma).unwrap();
        assert_eq!(s.matrix()[[0, 1]], 1.0);
        assert_abs_diff_eq!(s.matrix()[[0, 2]], (-1.0f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.matrix()[[0, 2]], 0.367879, epsilon = 1e-6);

        let far = array![[0.0], [100.0]];
        let s = gaussian_similarity(far.view(), 1.0).unwrap();
        assert_eq!(s.matrix()[[0, 1]], 0.0);
    }

    #[test]
    fn kernel_errors() {
        let x = array![[0.0], [1.0]];
        assert_eq!(
            gaussian_similarity(x.view(), 0.0),
            Err(AffinityError::NonPositiveSigma(0.0))
        );
        let one = array![[0.0]];
        assert_eq!(
            gaussian_similarity(one.view(), 1.0),
            Err(AffinityError::TooFewRows(1))
        );
    }

    #[test]
    fn median_sigma() {
        let x = array![[0.0], [1.0], [3.0]];
        assert_eq!(median_heuristic_sigma(x.view()).unwrap(), 2.0);
        let x = array![[0.0, 0.0], [3.0, 4.0]];
        assert_eq!(median_heuristic_sigma(x.view()).unwrap(), 5.0);
        let x = array![[2.0], [2.0], [2.0]];
        assert_eq!(
            median_heuristic_sigma(x.view()),
            Err(AffinityError::DegenerateData)
        );
        // 6 of 10 pairs coincide, so the median falls back to the positive distances
        let x = array![[0.0], [0.0], [0.0], [0.0], [4.0]];
        assert_eq!(median_heuristic_sigma(x.view()).unwrap(), 4.0);
    }

    #[test]
    fn knn_collinear_example() {
        let x = array![[0.0], [1.0], [10.0]];
        let s = gaussian_similarity(x.view(), 20.0).unwrap();
        let sp = knn_sparsify(&s, 1).unwrap();
        let m = sp.matrix();
        assert!(m[[0, 1]] > 0.0 && m[[1, 0]] > 0.0);
        assert!(m[[1, 2]] > 0.0 && m[[2, 1]] > 0.0);
        assert_eq!(m[[0, 2]], 0.0);
        assert_eq!(m[[2, 0]], 0.0);
        assert_eq!(sp.sparsified_k(), Some(1));
    }

    #[test]
    fn knn_full_neighbourhood_is_identity_op() {
        let x = array![[0.0], [1.0], [10.0], [4.0]];
        let s = gaussian_similarity(x.view(), 3.0).unwrap();
        assert_eq!(knn_sparsify(&s, 3).unwrap().matrix(), s.matrix());
        assert!(matches!(
            knn_sparsify(&s, 0),
            Err(AffinityError::KOutOfRange { k: 0, .. })
        ));
        assert!(knn_sparsify(&s, 4).is_err());
    }

    #[test]
    fn from_matrix_validates() {
        assert!(SimilarityMatrix::from_matrix(Array2::eye(3), 1.0).is_ok());
        let mut bad = Array2::eye(2);
        bad[[0, 1]] = 0.5;
        assert!(SimilarityMatrix::from_matrix(bad, 1.0).is_err());
    }
}
