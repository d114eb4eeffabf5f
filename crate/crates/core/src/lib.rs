//! Spectral clustering of entities described by tabular indicators.
//!
//! The pipeline runs in six stages:
//!
//! ```text
//! CSV ─▶ impute / adjust / standardize ─▶ Gaussian affinity S
//!     ─▶ Laplacian L ─▶ eigendecomposition ─▶ eigen-gap k
//!     ─▶ spectral embedding U ─▶ k-means ─▶ silhouette sweep
//!     ─▶ Low / Medium / High categories ─▶ reports + SVG plots
//! ```
//!
//! Each stage lives in its own module and can be used on its own:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`dataset`] | CSV ingest, median imputation, rate adjustment, z-scores, descriptive stats |
//! | [`affinity`] | Gaussian kernel similarity, median-distance bandwidth, kNN sparsification |
//! | [`spectral`] | Degrees, Laplacians, cyclic Jacobi eigensolver, spectral embedding |
//! | [`kmeans`] | Seeded k-means++ with Lloyd iterations and restarts |
//! | [`selection`] | Eigen-gap heuristic, silhouette coefficient, k sweeps |
//! | [`report`] | Category labelling, share percentages, `entities.csv` / `summary.json` / SVGs |
//! | [`pipeline`] | End-to-end orchestration used by the `cluster` CLI |
//!
//! ```
//! use provclust::{affinity, spectral, selection};
//! use ndarray::array;
//!
//! let x = array![[0.0], [0.1], [10.0], [10.1]];
//! let s = affinity::gaussian_similarity(x.view(), 1.0).unwrap();
//! let l = spectral::laplacian(&s, spectral::LaplacianVariant::SymmetricNormalized).unwrap();
//! let eig = spectral::eigendecompose_symmetric(l.matrix()).unwrap();
//! let gaps = selection::eigen_gaps(eig.eigenvalues()).unwrap();
//! assert_eq!(selection::optimal_k_eigengap(&gaps, 1, 3).unwrap(), 2);
//! ```

pub mod affinity;
pub mod dataset;
mod error;
mod io;
pub mod kmeans;
pub mod pipeline;
pub mod report;
pub mod selection;
pub mod spectral;
pub mod synth;

pub use affinity::{AffinityError, SimilarityMatrix};
pub use dataset::{Column, DatasetError, DescriptiveStats, FeatureMatrix, IndicatorTable, Rate};
pub use error::{Error, Result};
pub use kmeans::{ClusteringResult, KMeansError, KMeansParams};
pub use pipeline::{
    run_pipeline, OutputOptions, PipelineConfig, PipelineError, PipelineRun, Stage,
};
pub use report::{CategoryAssignment, ReportError, ShareSummary};
pub use selection::{SelectionError, SelectionReport, SilhouetteSpace};
pub use spectral::{
    EigenSystem, LaplacianMatrix, LaplacianVariant, SpectralEmbedding, SpectralError,
};
