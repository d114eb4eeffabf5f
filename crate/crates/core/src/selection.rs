//! Choosing the number of clusters: the eigen-gap heuristic and silhouette
//! sweeps over candidate k.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affinity::SimilarityMatrix;
use crate::kmeans::{kmeans, ClusteringResult, KMeansError, KMeansParams};
use crate::spectral::{
    embed, laplacian, EigenSystem, LaplacianVariant, SpectralEmbedding, SpectralError,
};

#[derive(Debug, Error, PartialEq)]
pub enum SelectionError {
    #[error("eigenvalues are not sorted ascending at position {0}")]
    NotSorted(usize),
    #[error("need at least 2 eigenvalues, got {0}")]
    TooShort(usize),
    #[error("invalid k range [{min}, {max}] (allowed within [{lo}, {hi}])")]
    RangeInvalid {
        min: usize,
        max: usize,
        lo: usize,
        hi: usize,
    },
    #[error("silhouette needs at least 2 clusters")]
    SingleCluster,
    #[error("silhouette of an empty point set")]
    EmptyInput,
    #[error("{points} points but {labels} labels")]
    LengthMismatch { points: usize, labels: usize },
    #[error("silhouette in feature space requested but no features were supplied")]
    MissingFeatures,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    KMeans(#[from] KMeansError),
}

impl SelectionError {
    pub fn kind(&self) -> &'static str {
        match self {
            SelectionError::NotSorted(_) => "NotSorted",
            SelectionError::TooShort(_) => "TooShort",
            SelectionError::RangeInvalid { .. } => "RangeInvalid",
            SelectionError::SingleCluster => "SingleCluster",
            SelectionError::EmptyInput => "EmptyInput",
            SelectionError::LengthMismatch { .. } => "LengthMismatch",
            SelectionError::MissingFeatures => "MissingFeatures",
            SelectionError::Spectral(e) => e.kind(),
            SelectionError::KMeans(e) => e.kind(),
        }
    }
}

/// `Δ_i = λ_{i+1} − λ_i` for ascending eigenvalues; `gaps[i - 1]` holds `Δ_i`.
pub fn eigen_gaps(eigenvalues: &[f64]) -> Result<Vec<f64>, SelectionError> {
    if eigenvalues.len() < 2 {
        return Err(SelectionError::TooShort(eigenvalues.len()));
    }
    eigenvalues
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            if w[1] < w[0] {
                Err(SelectionError::NotSorted(i + 1))
            } else {
                Ok(w[1] - w[0])
            }
        })
        .collect()
}

/// The 1-based index `i ∈ [k_min, k_max]` with the largest gap `Δ_i`; ties go
/// to the smallest index.
pub fn optimal_k_eigengap(
    gaps: &[f64],
    k_min: usize,
    k_max: usize,
) -> Result<usize, SelectionError> {
    if k_min < 1 || k_min > k_max || k_max > gaps.len() {
        return Err(SelectionError::RangeInvalid {
            min: k_min,
            max: k_max,
            lo: 1,
            hi: gaps.len(),
        });
    }
    let mut best = k_min;
    for i in k_min..=k_max {
        if gaps[i - 1] > gaps[best - 1] {
            best = i;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Silhouette {
    /// s(i) per point.
    pub values: Vec<f64>,
    /// Unweighted mean of `values`.
    pub mean: f64,
}

/// Silhouette coefficients under Euclidean distance.
///
/// `a(i)` is the mean distance to the other members of i's cluster, `b(i)` the
/// smallest mean distance to another cluster, and
/// `s(i) = (b(i) − a(i)) / max(a(i), b(i))`. Members of singleton clusters,
/// and points with `a(i) = b(i) = 0`, get `s(i) = 0`. Labels may be any
/// integers.
pub fn silhouette(points: ArrayView2<f64>, labels: &[usize]) -> Result<Silhouette, SelectionError> {
    let n = points.nrows();
    if n == 0 {
        return Err(SelectionError::EmptyInput);
    }
    if labels.len() != n {
        return Err(SelectionError::LengthMismatch {
            points: n,
            labels: labels.len(),
        });
    }
    let mut dense: HashMap<usize, usize> = HashMap::new();
    let cluster: Vec<usize> = labels
        .iter()
        .map(|l| {
            let next = dense.len();
            *dense.entry(*l).or_insert(next)
        })
        .collect();
    let k = dense.len();
    if k < 2 {
        return Err(SelectionError::SingleCluster);
    }
    let mut sizes = vec![0usize; k];
    for &c in &cluster {
        sizes[c] += 1;
    }

    // sums[i * k + c]: total distance from point i to the members of cluster c
    let mut sums = vec![0.0; n * k];
    for i in 0..n {
        let pi = points.row(i);
        for j in (i + 1)..n {
            let d = pi
                .iter()
                .zip(points.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            sums[i * k + cluster[j]] += d;
            sums[j * k + cluster[i]] += d;
        }
    }

    let values: Vec<f64> = (0..n)
        .map(|i| {
            let own = cluster[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let a = sums[i * k + own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[i * k + c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect();
    let mean = values.iter().sum::<f64>() / n as f64;
    Ok(Silhouette { values, mean })
}

/// Coordinates the silhouette is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SilhouetteSpace {
    /// The spectral-embedding rows that k-means clustered.
    #[default]
    Embedding,
    /// The standardized input features.
    Features,
}

impl fmt::Display for SilhouetteSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SilhouetteSpace::Embedding => "embedding",
            SilhouetteSpace::Features => "features",
        })
    }
}

impl FromStr for SilhouetteSpace {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "embedding" => Ok(SilhouetteSpace::Embedding),
            "features" => Ok(SilhouetteSpace::Features),
            other => Err(format!(
                "unknown silhouette space {other:?} (expected embedding|features)"
            )),
        }
    }
}

/// Inclusive range of candidate cluster counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KRange {
    pub min: usize,
    pub max: usize,
}

impl KRange {
    pub const DEFAULT_MAX: usize = 10;

    pub fn new(min: usize, max: usize) -> Self {
        KRange { min, max }
    }

    /// `[2, min(10, n − 1)]`.
    pub fn default_for(n: usize) -> Self {
        KRange {
            min: 2,
            max: Self::DEFAULT_MAX.min(n.saturating_sub(1)),
        }
    }

    pub fn len(&self) -> usize {
        (self.max + 1).saturating_sub(self.min)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<usize> {
        self.min..=self.max
    }
}

impl FromStr for KRange {
    type Err = String;

    /// Parses `min,max`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| format!("expected <min>,<max>, got {s:?}"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad k bound {v:?}: {e}"))
        };
        Ok(KRange::new(parse(a)?, parse(b)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub variant: LaplacianVariant,
    pub row_normalize: bool,
    /// `k` is overwritten per candidate.
    pub kmeans: KMeansParams,
    pub space: SilhouetteSpace,
}

impl SweepConfig {
    pub fn new(variant: LaplacianVariant) -> Self {
        SweepConfig {
            variant,
            row_normalize: variant.default_row_normalize(),
            kmeans: KMeansParams::new(2),
            space: SilhouetteSpace::Embedding,
        }
    }
}

/// Eigen-gap choice plus the silhouette of every candidate k.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    pub eigenvalues: Vec<f64>,
    pub gaps: Vec<f64>,
    pub chosen_k: usize,
    pub k_range: KRange,
    pub silhouette_by_k: BTreeMap<usize, f64>,
    pub silhouette_space: SilhouetteSpace,
}

impl SelectionReport {
    /// Candidate with the highest mean silhouette (smallest k on ties).
    pub fn best_silhouette_k(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (&k, &s) in &self.silhouette_by_k {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((k, s));
            }
        }
        best.map(|(k, _)| k)
    }
}

/// One candidate evaluated during a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub embedding: SpectralEmbedding,
    pub clustering: ClusteringResult,
    pub silhouette: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub report: SelectionReport,
    pub candidates: BTreeMap<usize, Candidate>,
}

/// Embeds, clusters and scores one candidate k.
pub fn evaluate_k(
    eigen: &EigenSystem,
    k: usize,
    config: &SweepConfig,
    features: Option<ArrayView2<f64>>,
) -> Result<Candidate, SelectionError> {
    let embedding = embed(eigen, k, config.row_normalize)?;
    let params = KMeansParams { k, ..config.kmeans };
    let clustering = kmeans(embedding.matrix().view(), &params)?;
    let silhouette = match config.space {
        SilhouetteSpace::Embedding => silhouette(embedding.matrix().view(), &clustering.labels)?,
        SilhouetteSpace::Features => silhouette(
            features.ok_or(SelectionError::MissingFeatures)?,
            &clustering.labels,
        )?,
    }
    .mean;
    Ok(Candidate {
        embedding,
        clustering,
        silhouette,
    })
}

/// Runs every candidate k in `range` against a precomputed eigensystem.
pub fn sweep_eigensystem(
    eigen: &EigenSystem,
    range: KRange,
    config: &SweepConfig,
    features: Option<ArrayView2<f64>>,
) -> Result<Sweep, SelectionError> {
    let n = eigen.n();
    if range.min < 2 || range.min > range.max || range.max + 1 > n {
        return Err(SelectionError::RangeInvalid {
            min: range.min,
            max: range.max,
            lo: 2,
            hi: n.saturating_sub(1),
        });
    }
    if config.space == SilhouetteSpace::Features && features.is_none() {
        return Err(SelectionError::MissingFeatures);
    }
    let gaps = eigen_gaps(eigen.eigenvalues())?;
    let chosen_k = optimal_k_eigengap(&gaps, range.min, range.max)?;
    let mut candidates = BTreeMap::new();
    for k in range.iter() {
        candidates.insert(k, evaluate_k(eigen, k, config, features)?);
    }
    let report = SelectionReport {
        eigenvalues: eigen.eigenvalues().to_vec(),
        gaps,
        chosen_k,
        k_range: range,
        silhouette_by_k: candidates.iter().map(|(&k, c)| (k, c.silhouette)).collect(),
        silhouette_space: config.space,
    };
    Ok(Sweep { report, candidates })
}

/// Builds the Laplacian of `s`, decomposes it and sweeps `range`.
pub fn sweep_k(
    s: &SimilarityMatrix,
    range: KRange,
    config: &SweepConfig,
    features: Option<ArrayView2<f64>>,
) -> Result<SelectionReport, SelectionError> {
    let eigen = laplacian(s, config.variant)?.eigen()?;
    Ok(sweep_eigensystem(&eigen, range, config, features)?.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn gap_examples() {
        let g = eigen_gaps(&[0.0, 0.0, 0.0, 0.9, 1.0]).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(&g[..3], &[0.0, 0.0, 0.9]);
        assert_abs_diff_eq!(g[3], 0.1, epsilon = 1e-15);
        assert_eq!(eigen_gaps(&[0.5; 4]).unwrap(), vec![0.0; 3]);
        assert_eq!(eigen_gaps(&[1.0]), Err(SelectionError::TooShort(1)));
        assert_eq!(eigen_gaps(&[1.0, 0.0]), Err(SelectionError::NotSorted(1)));
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(optimal_k_eigengap(&[0.0, 0.0, 0.9, 0.1], 2, 4), Ok(3));
        assert_eq!(optimal_k_eigengap(&[0.5, 0.5], 1, 2), Ok(1));
        assert!(matches!(
            optimal_k_eigengap(&[0.0; 4], 4, 2),
            Err(SelectionError::RangeInvalid { .. })
        ));
        assert!(optimal_k_eigengap(&[0.0; 4], 0, 2).is_err());
        assert!(optimal_k_eigengap(&[0.0; 4], 2, 5).is_err());
    }

    #[test]
    fn silhouette_two_pairs() {
        let x = array![[0.0], [1.0], [10.0], [11.0]];
        let s = silhouette(x.view(), &[0, 0, 1, 1]).unwrap();
        assert_abs_diff_eq!(s.values[0], 9.5 / 10.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.values[0], 0.904762, epsilon = 5e-7);
        assert_abs_diff_eq!(s.values[1], 8.5 / 9.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.mean, (9.5 / 10.5 + 8.5 / 9.5) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn silhouette_edge_cases() {
        // point 1 sits midway: a = b = 1
        let x = array![[0.0], [1.0], [2.0]];
        let s = silhouette(x.view(), &[7, 7, 3]).unwrap();
        assert_eq!(s.values[1], 0.0);
        assert_eq!(s.values[2], 0.0, "singleton");
        assert_eq!(
            silhouette(x.view(), &[1, 1, 1]),
            Err(SelectionError::SingleCluster)
        );
        assert_eq!(
            silhouette(ndarray::Array2::<f64>::zeros((0, 1)).view(), &[]),
            Err(SelectionError::EmptyInput)
        );
    }

    #[test]
    fn krange_parsing_and_defaults() {
        assert_eq!("2,5".parse::<KRange>().unwrap(), KRange::new(2, 5));
        assert!("2-5".parse::<KRange>().is_err());
        assert_eq!(KRange::default_for(81), KRange::new(2, 10));
        assert_eq!(KRange::default_for(4), KRange::new(2, 3));
        assert!(KRange::new(4, 2).is_empty());
    }

    #[test]
    fn sweep_single_candidate() {
        let x = array![[0.0], [0.1], [0.2], [5.0], [5.1], [5.2]];
        let s = crate::affinity::gaussian_similarity(x.view(), 1.0).unwrap();
        let cfg = SweepConfig::new(LaplacianVariant::SymmetricNormalized);
        let r = sweep_k(&s, KRange::new(2, 2), &cfg, None).unwrap();
        assert_eq!(r.silhouette_by_k.len(), 1);
        assert_eq!(r.chosen_k, 2);
        assert_eq!(r.gaps.len(), 5);
        assert!(sweep_k(&s, KRange::new(1, 2), &cfg, None).is_err());
        assert!(sweep_k(&s, KRange::new(2, 6), &cfg, None).is_err());
        let feat = SweepConfig {
            space: SilhouetteSpace::Features,
            ..cfg
        };
        assert_eq!(
            sweep_k(&s, KRange::new(2, 2), &feat, None),
            Err(SelectionError::MissingFeatures)
        );
        let r = sweep_k(&s, KRange::new(2, 3), &feat, Some(x.view())).unwrap();
        assert!(r.silhouette_by_k[&2] > 0.9);
    }
}
