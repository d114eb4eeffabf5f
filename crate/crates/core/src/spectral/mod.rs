//! Graph Laplacians, symmetric eigendecomposition and spectral embeddings.
//!
//! ```text
//! Unnormalized:          L = D − S
//!   null space spanned by connected-component indicators
//!
//! Symmetric-normalized:  L = I − D^{-1/2} S D^{-1/2}
//!   spectrum in [0, 2]; its smallest eigenvectors are the largest
//!   eigenvectors of the normalized affinity D^{-1/2} S D^{-1/2}
//! ```
//!
//! Both variants are consumed the same way: the k eigenvectors with the
//! smallest eigenvalues form the embedding.

mod jacobi;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affinity::SimilarityMatrix;

pub use jacobi::{MAX_SWEEPS, OFF_DIAGONAL_RTOL};

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("zero degree at node {0}")]
    ZeroDegree(usize),
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),
    #[error("matrix is not symmetric: |a[{i},{j}] - a[{j},{i}]| = {diff:e}")]
    NotSymmetric { i: usize, j: usize, diff: f64 },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error(
        "Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})"
    )]
    NoConvergence { sweeps: usize, residual: f64 },
    #[error("embedding dimension k = {k} outside 1..={n}")]
    KOutOfRange { k: usize, n: usize },
}

impl SpectralError {
    pub fn kind(&self) -> &'static str {
        match self {
            SpectralError::ZeroDegree(_) => "ZeroDegree",
            SpectralError::NotSquare(..) => "NotSquare",
            SpectralError::NotSymmetric { .. } => "NotSymmetric",
            SpectralError::NonFinite => "NonFinite",
            SpectralError::NoConvergence { .. } => "NoConvergence",
            SpectralError::KOutOfRange { .. } => "KOutOfRange",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LaplacianVariant {
    #[serde(rename = "unnorm")]
    Unnormalized,
    #[serde(rename = "sym")]
    SymmetricNormalized,
}

impl LaplacianVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            LaplacianVariant::Unnormalized => "unnorm",
            LaplacianVariant::SymmetricNormalized => "sym",
        }
    }

    /// Row normalization is on for the symmetric-normalized variant and off
    /// for the unnormalized one unless overridden.
    pub fn default_row_normalize(self) -> bool {
        matches!(self, LaplacianVariant::SymmetricNormalized)
    }
}

impl fmt::Display for LaplacianVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LaplacianVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sym" | "symmetric" => Ok(LaplacianVariant::SymmetricNormalized),
            "unnorm" | "unnormalized" => Ok(LaplacianVariant::Unnormalized),
            other => Err(format!(
                "unknown Laplacian variant {other:?} (expected sym|unnorm)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    matrix: Array2<f64>,
    variant: LaplacianVariant,
    degrees: Vec<f64>,
}

impl LaplacianMatrix {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn variant(&self) -> LaplacianVariant {
        self.variant
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn eigen(&self) -> Result<EigenSystem, SpectralError> {
        eigendecompose_symmetric(&self.matrix)
    }
}

/// Row sums of S. With a unit diagonal every degree is at least 1.
pub fn degrees(s: &SimilarityMatrix) -> Vec<f64> {
    s.matrix().rows().into_iter().map(|r| r.sum()).collect()
}

pub fn laplacian(
    s: &SimilarityMatrix,
    variant: LaplacianVariant,
) -> Result<LaplacianMatrix, SpectralError> {
    let d = degrees(s);
    if let Some(i) = d.iter().position(|&v| v.is_nan() || v <= 0.0) {
        return Err(SpectralError::ZeroDegree(i));
    }
    let m = s.matrix();
    let n = s.n();
    let mut l = Array2::zeros((n, n));
    match variant {
        LaplacianVariant::Unnormalized => {
            for i in 0..n {
                l[[i, i]] = d[i] - m[[i, i]];
                for j in (i + 1)..n {
                    l[[i, j]] = -m[[i, j]];
                    l[[j, i]] = -m[[i, j]];
                }
            }
        }
        LaplacianVariant::SymmetricNormalized => {
            let inv_sqrt: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
            for i in 0..n {
                l[[i, i]] = 1.0 - m[[i, i]] * inv_sqrt[i] * inv_sqrt[i];
                for j in (i + 1)..n {
                    let v = -m[[i, j]] * inv_sqrt[i] * inv_sqrt[j];
                    l[[i, j]] = v;
                    l[[j, i]] = v;
                }
            }
        }
    }
    Ok(LaplacianMatrix {
        matrix: l,
        variant,
        degrees: d,
    })
}

/// Full eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    eigenvalues: Vec<f64>,
    eigenvectors: Array2<f64>,
    sweeps: usize,
}

impl EigenSystem {
    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns; column j pairs with eigenvalue j.
    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigenvectors
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Number of Jacobi sweeps used.
    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// V Λ Vᵀ.
    pub fn reconstruct(&self) -> Array2<f64> {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (mut col, &lambda) in scaled.columns_mut().into_iter().zip(&self.eigenvalues) {
            col *= lambda;
        }
        scaled.dot(&v.t())
    }
}

/// Symmetry tolerance, relative to `max(1, ‖A‖_max)`.
const SYMMETRY_TOL: f64 = 1e-10;

/// Eigendecomposition by cyclic Jacobi rotations.
///
/// Eigenvalues come back ascending; equal eigenvalues keep the order the
/// sweep left them in. Each eigenvector is signed so that its largest-magnitude
/// component (the first one, on near-ties) is positive.
pub fn eigendecompose_symmetric(a: &Array2<f64>) -> Result<EigenSystem, SpectralError> {
    let (n, m) = a.dim();
    if n != m {
        return Err(SpectralError::NotSquare(n, m));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(SpectralError::NonFinite);
    }
    let scale = a.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let mut flat = vec![0.0; n * n];
    for i in 0..n {
        flat[i * n + i] = a[[i, i]];
        for j in (i + 1)..n {
            let diff = (a[[i, j]] - a[[j, i]]).abs();
            if diff > SYMMETRY_TOL * scale {
                return Err(SpectralError::NotSymmetric { i, j, diff });
            }
            let v = 0.5 * (a[[i, j]] + a[[j, i]]);
            flat[i * n + j] = v;
            flat[j * n + i] = v;
        }
    }

    let diag = jacobi::diagonalize(flat, n).map_err(|e| SpectralError::NoConvergence {
        sweeps: e.sweeps,
        residual: e.residual,
    })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| diag.values[x].total_cmp(&diag.values[y]).then(x.cmp(&y)));

    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        let col: Vec<f64> = (0..n).map(|r| diag.vectors[r * n + src]).collect();
        let max_abs = col.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let pivot = col
            .iter()
            .position(|v| v.abs() >= max_abs * (1.0 - 1e-9))
            .unwrap_or(0);
        let sign = if col.get(pivot).is_some_and(|v| *v < 0.0) {
            -1.0
        } else {
            1.0
        };
        for (r, v) in col.into_iter().enumerate() {
            vectors[[r, dst]] = sign * v;
        }
    }

    Ok(EigenSystem {
        eigenvalues: order.iter().map(|&i| diag.values[i]).collect(),
        eigenvectors: vectors,
        sweeps: diag.sweeps,
    })
}

/// The n×k matrix U of leading (smallest-eigenvalue) eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    matrix: Array2<f64>,
    row_normalized: bool,
}

impl SpectralEmbedding {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn k(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn row_normalized(&self) -> bool {
        self.row_normalized
    }
}

/// Takes the first `k` eigenvector columns and, when `row_normalize` is set,
/// scales every nonzero row to unit length.
pub fn embed(
    eigen: &EigenSystem,
    k: usize,
    row_normalize: bool,
) -> Result<SpectralEmbedding, SpectralError> {
    let n = eigen.n();
    if k == 0 || k > n {
        return Err(SpectralError::KOutOfRange { k, n });
    }
    let mut u = eigen.eigenvectors.slice(ndarray::s![.., ..k]).to_owned();
    if row_normalize {
        for mut row in u.rows_mut() {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row /= norm;
            }
        }
    }
    Ok(SpectralEmbedding {
        matrix: u,
        row_normalized: row_normalize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn sim(m: Array2<f64>) -> SimilarityMatrix {
        SimilarityMatrix::from_matrix(m, 1.0).unwrap()
    }

    fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        a.iter()
            .zip(b.iter())
            .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
    }

    #[test]
    fn degree_examples() {
        assert_eq!(degrees(&sim(Array2::eye(3))), vec![1.0, 1.0, 1.0]);
        assert_eq!(degrees(&sim(Array2::ones((2, 2)))), vec![2.0, 2.0]);
    }

    #[test]
    fn laplacian_of_complete_pair() {
        let l = laplacian(&sim(Array2::ones((2, 2))), LaplacianVariant::Unnormalized).unwrap();
        assert_eq!(l.matrix(), &array![[1.0, -1.0], [-1.0, 1.0]]);
        let e = l.eigen().unwrap();
        assert_abs_diff_eq!(e.eigenvalues()[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.eigenvalues()[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn laplacian_of_identity_is_zero() {
        for variant in [
            LaplacianVariant::Unnormalized,
            LaplacianVariant::SymmetricNormalized,
        ] {
            let l = laplacian(&sim(Array2::eye(4)), variant).unwrap();
            assert!(l.matrix().iter().all(|&v| v == 0.0));
            let e = l.eigen().unwrap();
            assert!(e.eigenvalues().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn diagonal_matrix_eigensystem() {
        let e = eigendecompose_symmetric(&Array2::from_diag(&array![3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.eigenvalues(), &[1.0, 2.0, 3.0]);
        let expected = array![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        assert_eq!(e.eigenvectors(), &expected);
        assert_eq!(e.sweeps(), 0);
    }

    #[test]
    fn two_by_two_eigensystem() {
        let e = eigendecompose_symmetric(&array![[2.0, 1.0], [1.0, 2.0]]).unwrap();
        assert_abs_diff_eq!(e.eigenvalues()[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues()[1], 3.0, epsilon = 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = e.eigenvectors();
        assert_abs_diff_eq!(v[[0, 0]], h, epsilon = 1e-14);
        assert_abs_diff_eq!(v[[1, 0]], -h, epsilon = 1e-14);
        assert_abs_diff_eq!(v[[0, 1]], h, epsilon = 1e-14);
        assert_abs_diff_eq!(v[[1, 1]], h, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            eigendecompose_symmetric(&array![[1.0, 2.0], [0.0, 1.0]]),
            Err(SpectralError::NotSymmetric { i: 0, j: 1, .. })
        ));
        assert!(matches!(
            eigendecompose_symmetric(&Array2::zeros((2, 3))),
            Err(SpectralError::NotSquare(2, 3))
        ));
        assert_eq!(
            eigendecompose_symmetric(&array![[f64::NAN]]),
            Err(SpectralError::NonFinite)
        );
    }

    #[test]
    fn reconstruction_small() {
        let a = array![[4.0, 1.0, -2.0], [1.0, 2.0, 0.5], [-2.0, 0.5, 3.0]];
        let e = eigendecompose_symmetric(&a).unwrap();
        assert!(max_abs_diff(&e.reconstruct(), &a) < 1e-12);
        let vtv = e.eigenvectors().t().dot(e.eigenvectors());
        assert!(max_abs_diff(&vtv, &Array2::eye(3)) < 1e-12);
    }

    #[test]
    fn embed_bounds_and_full_basis() {
        let a = array![[4.0, 1.0, -2.0], [1.0, 2.0, 0.5], [-2.0, 0.5, 3.0]];
        let e = eigendecompose_symmetric(&a).unwrap();
        assert_eq!(
            embed(&e, 0, false),
            Err(SpectralError::KOutOfRange { k: 0, n: 3 })
        );
        assert!(embed(&e, 4, false).is_err());
        let u = embed(&e, 3, false).unwrap();
        let utu = u.matrix().t().dot(u.matrix());
        assert!(max_abs_diff(&utu, &Array2::eye(3)) < 1e-12);
    }

    #[test]
    fn embed_leaves_zero_rows() {
        let e = EigenSystem {
            eigenvalues: vec![0.0, 1.0],
            eigenvectors: array![[1.0, 0.0], [0.0, 1.0]],
            sweeps: 0,
        };
        let u = embed(&e, 1, true).unwrap();
        assert_eq!(u.matrix(), &array![[1.0], [0.0]]);
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("sym".parse(), Ok(LaplacianVariant::SymmetricNormalized));
        assert_eq!("unnorm".parse(), Ok(LaplacianVariant::Unnormalized));
        assert!("rw".parse::<LaplacianVariant>().is_err());
    }
}
