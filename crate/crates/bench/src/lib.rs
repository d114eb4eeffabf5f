//! Shared inputs for the benchmarks.

use ndarray::Array2;
use provclust::affinity::{gaussian_similarity, median_heuristic_sigma};
use provclust::spectral::{laplacian, LaplacianMatrix, LaplacianVariant};
use provclust::synth;

/// Standardization is skipped: the blobs are already on a common scale.
pub fn blobs(seed: u64) -> Array2<f64> {
    synth::three_blobs(seed).0
}

/// Symmetric-normalized Laplacian of the 81-point blob fixture.
pub fn blob_laplacian(seed: u64) -> LaplacianMatrix {
    let x = blobs(seed);
    let sigma = median_heuristic_sigma(x.view()).expect("distinct points");
    let s = gaussian_similarity(x.view(), sigma).expect("valid sigma");
    laplacian(&s, LaplacianVariant::SymmetricNormalized).expect("connected")
}
