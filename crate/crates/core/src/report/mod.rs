//! Ordered performance categories, share percentages and output files.

mod emit;
mod plot;

use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

pub use emit::{
    emit_matrices, emit_plots, emit_report, entities_csv, summary_json, SCHEMA_VERSION,
};
pub use plot::{gap_svg, scree_svg, silhouette_svg};

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("{clusters} clusters but {names} category names")]
    CountMismatch { clusters: usize, names: usize },
    #[error("{labels} labels but {other} {what}")]
    LengthMismatch {
        labels: usize,
        other: usize,
        what: &'static str,
    },
    #[error("no entities to summarize")]
    EmptyAssignment,
    #[error("cannot write {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl ReportError {
    pub fn kind(&self) -> &'static str {
        match self {
            ReportError::CountMismatch { .. } => "CountMismatch",
            ReportError::LengthMismatch { .. } => "LengthMismatch",
            ReportError::EmptyAssignment => "EmptyAssignment",
            ReportError::Io { .. } => "IoError",
        }
    }
}

/// Category names for `k` clusters, lowest first.
pub fn default_category_names(k: usize) -> Vec<String> {
    let fixed: &[&str] = match k {
        1 => &["All"],
        2 => &["Low", "High"],
        3 => &["Low", "Medium", "High"],
        4 => &["Low", "Lower-Medium", "Upper-Medium", "High"],
        5 => &["Very Low", "Low", "Medium", "High", "Very High"],
        _ => &[],
    };
    if fixed.len() == k {
        fixed.iter().map(|s| s.to_string()).collect()
    } else {
        (1..=k).map(|r| format!("Rank {r}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryEntry {
    pub entity_id: String,
    pub cluster: usize,
    pub category: String,
    pub reference_value: f64,
}

/// One category with the cluster it names, in ascending rank order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryRank {
    pub category: String,
    pub cluster: usize,
    pub mean_reference: f64,
    pub count: usize,
}

/// Entity → (cluster, category) with categories in one-to-one correspondence
/// with clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryAssignment {
    entries: Vec<CategoryEntry>,
    ranks: Vec<CategoryRank>,
}

impl CategoryAssignment {
    pub fn entries(&self) -> &[CategoryEntry] {
        &self.entries
    }

    /// Categories from lowest to highest mean reference value.
    pub fn ranks(&self) -> &[CategoryRank] {
        &self.ranks
    }

    pub fn category_of_cluster(&self, cluster: usize) -> Option<&str> {
        self.ranks
            .iter()
            .find(|r| r.cluster == cluster)
            .map(|r| r.category.as_str())
    }
}

/// Ranks clusters by the mean of `reference` over their members and gives
/// rank r the name `names[r]`. Equal means rank the smaller cluster label
/// first.
pub fn label_categories(
    entity_ids: &[String],
    labels: &[usize],
    reference: &[f64],
    names: &[String],
) -> Result<CategoryAssignment, ReportError> {
    if reference.len() != labels.len() {
        return Err(ReportError::LengthMismatch {
            labels: labels.len(),
            other: reference.len(),
            what: "reference values",
        });
    }
    if entity_ids.len() != labels.len() {
        return Err(ReportError::LengthMismatch {
            labels: labels.len(),
            other: entity_ids.len(),
            what: "entity ids",
        });
    }
    let mut clusters: Vec<usize> = labels.to_vec();
    clusters.sort_unstable();
    clusters.dedup();
    if clusters.len() != names.len() {
        return Err(ReportError::CountMismatch {
            clusters: clusters.len(),
            names: names.len(),
        });
    }
    let mut stats: Vec<(usize, f64, usize)> = clusters
        .iter()
        .map(|&c| {
            let members: Vec<f64> = labels
                .iter()
                .zip(reference)
                .filter(|(l, _)| **l == c)
                .map(|(_, v)| *v)
                .collect();
            let mean = members.iter().sum::<f64>() / members.len() as f64;
            (c, mean, members.len())
        })
        .collect();
    stats.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    let ranks: Vec<CategoryRank> = stats
        .iter()
        .zip(names)
        .map(|(&(cluster, mean_reference, count), name)| CategoryRank {
            category: name.clone(),
            cluster,
            mean_reference,
            count,
        })
        .collect();
    let entries = entity_ids
        .iter()
        .zip(labels)
        .zip(reference)
        .map(|((id, &cluster), &value)| CategoryEntry {
            entity_id: id.clone(),
            cluster,
            category: ranks
                .iter()
                .find(|r| r.cluster == cluster)
                .map(|r| r.category.clone())
                .unwrap_or_default(),
            reference_value: value,
        })
        .collect();
    Ok(CategoryAssignment { entries, ranks })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Share {
    pub category: String,
    pub count: usize,
    /// `round(100 · count / total)`, halves rounded up.
    pub percent: u32,
}

/// Per-category counts and integer percentages. Percentages are rounded
/// independently, so they can add up to 99 or 101.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShareSummary {
    pub total: usize,
    pub shares: Vec<Share>,
}

impl ShareSummary {
    pub fn from_counts(counts: &[(String, usize)]) -> Result<Self, ReportError> {
        let total: usize = counts.iter().map(|(_, c)| c).sum();
        if total == 0 {
            return Err(ReportError::EmptyAssignment);
        }
        Ok(ShareSummary {
            total,
            shares: counts
                .iter()
                .map(|(name, count)| Share {
                    category: name.clone(),
                    count: *count,
                    percent: round_percent(*count, total),
                })
                .collect(),
        })
    }

    pub fn percent_sum(&self) -> u32 {
        self.shares.iter().map(|s| s.percent).sum()
    }
}

/// `100 · count / total` rounded half away from zero, in exact integer
/// arithmetic.
pub fn round_percent(count: usize, total: usize) -> u32 {
    assert!(total > 0, "total must be positive");
    let (c, t) = (count as u128, total as u128);
    ((200 * c + t) / (2 * t)) as u32
}

pub fn category_shares(assignment: &CategoryAssignment) -> Result<ShareSummary, ReportError> {
    if assignment.entries.is_empty() {
        return Err(ReportError::EmptyAssignment);
    }
    let counts: Vec<(String, usize)> = assignment
        .ranks
        .iter()
        .map(|r| (r.category.clone(), r.count))
        .collect();
    ShareSummary::from_counts(&counts)
}
