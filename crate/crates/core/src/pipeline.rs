//! End-to-end runs: load → impute → adjust → standardize → affinity →
//! Laplacian → eigendecomposition → k selection → embedding → k-means →
//! silhouette sweep → categories → output files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::affinity::{
    gaussian_similarity, knn_sparsify, median_heuristic_sigma, SimilarityMatrix,
};
use crate::dataset::{
    adjust_for_rate, describe, impute_missing, load_csv, standardize, DatasetError,
    DescriptiveStats, FeatureMatrix, IndicatorTable, Rate,
};
use crate::error::Error;
use crate::kmeans::{ClusteringResult, KMeansParams};
use crate::report::{
    category_shares, default_category_names, emit_matrices, emit_plots, emit_report,
    label_categories, CategoryAssignment, ReportError, Share, ShareSummary,
};
use crate::selection::{
    eigen_gaps, evaluate_k, optimal_k_eigengap, silhouette, sweep_eigensystem, KRange,
    SelectionReport, SilhouetteSpace, Sweep, SweepConfig,
};
use crate::spectral::{laplacian, EigenSystem, LaplacianVariant, SpectralEmbedding};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SigmaChoice {
    /// Median pairwise distance of the standardized features.
    Auto,
    Fixed(f64),
}

impl FromStr for SigmaChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(SigmaChoice::Auto);
        }
        s.parse::<f64>()
            .map(SigmaChoice::Fixed)
            .map_err(|_| format!("expected a number or \"auto\", got {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KChoice {
    /// Largest eigen-gap within the k range.
    Auto,
    Fixed(usize),
}

impl FromStr for KChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(KChoice::Auto);
        }
        s.parse::<usize>()
            .map(KChoice::Fixed)
            .map_err(|_| format!("expected an integer or \"auto\", got {s:?}"))
    }
}

/// Everything that affects the output of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: PathBuf,
    /// Indicators clustered jointly.
    pub columns: Vec<String>,
    pub adjust_rate: Option<Rate>,
    pub sigma: SigmaChoice,
    /// Symmetric kNN sparsification of the affinity; `None` keeps it dense.
    pub knn: Option<usize>,
    pub laplacian: LaplacianVariant,
    /// `None` uses the variant's default.
    pub row_normalize: Option<bool>,
    pub k: KChoice,
    /// `None` means `[2, min(10, n − 1)]`.
    pub k_range: Option<KRange>,
    pub seed: u64,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub silhouette_space: SilhouetteSpace,
    /// Column whose cluster means order the categories; defaults to the
    /// first clustered column.
    pub reference: Option<String>,
    /// Category names, lowest first; defaults to Low/Medium/High-style names.
    pub category_names: Option<Vec<String>>,
}

impl PipelineConfig {
    pub fn new(input: impl Into<PathBuf>, columns: &[&str]) -> Self {
        PipelineConfig {
            input: input.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            adjust_rate: None,
            sigma: SigmaChoice::Auto,
            knn: None,
            laplacian: LaplacianVariant::SymmetricNormalized,
            row_normalize: None,
            k: KChoice::Auto,
            k_range: None,
            seed: KMeansParams::DEFAULT_SEED,
            restarts: KMeansParams::DEFAULT_RESTARTS,
            max_iter: KMeansParams::DEFAULT_MAX_ITER,
            tol: KMeansParams::DEFAULT_TOL,
            silhouette_space: SilhouetteSpace::Embedding,
            reference: None,
            category_names: None,
        }
    }

    pub fn reference_column(&self) -> Option<&str> {
        self.reference
            .as_deref()
            .or(self.columns.first().map(String::as_str))
    }

    /// Columns that must be read from the input: clustered columns, the
    /// reference column and a per-entity rate column.
    pub fn required_columns(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.columns.iter().map(String::as_str).collect();
        if let Some(r) = self.reference_column() {
            if !names.contains(&r) {
                names.push(r);
            }
        }
        if let Some(Rate::Column(c)) = &self.adjust_rate {
            if !names.contains(&c.as_str()) {
                names.push(c);
            }
        }
        names
    }

    fn kmeans_params(&self, k: usize) -> KMeansParams {
        KMeansParams {
            k,
            seed: self.seed,
            restarts: self.restarts,
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Load,
    Impute,
    Adjust,
    Describe,
    Standardize,
    Affinity,
    Laplacian,
    Eigen,
    Selection,
    Clustering,
    Categories,
    Emit,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("stage serializes");
        f.write_str(s.as_str().unwrap_or("unknown"))
    }
}

#[derive(Debug, Error)]
#[error("{stage}: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl PipelineError {
    fn at(stage: Stage) -> impl FnOnce(Error) -> PipelineError {
        move |source| PipelineError { stage, source }
    }

    /// Single-line JSON description: `{"error":{"stage":…,"kind":…,"message":…}}`.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({
            "error": {
                "stage": self.stage,
                "kind": self.source.kind(),
                "message": self.source.to_string(),
            }
        })
        .to_string()
    }
}

fn fail<E: Into<Error>>(stage: Stage) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::at(stage)(e.into())
}

/// Outputs of every stage of one run.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub config: PipelineConfig,
    pub input_path: Option<PathBuf>,
    /// Clustered and reference columns after imputation and adjustment.
    pub table: IndicatorTable,
    pub imputed_cells: usize,
    /// Statistics of the observed (pre-imputation) values, per column.
    pub stats: Vec<(String, DescriptiveStats)>,
    pub features: FeatureMatrix,
    pub similarity: SimilarityMatrix,
    pub row_normalize: bool,
    pub eigen: EigenSystem,
    pub selection: SelectionReport,
    pub k_used: usize,
    pub embedding: SpectralEmbedding,
    pub clustering: ClusteringResult,
    /// Mean silhouette at `k_used`, when defined.
    pub silhouette: Option<f64>,
    pub reference: String,
    pub category_names: Vec<String>,
    pub categories: CategoryAssignment,
    pub shares: ShareSummary,
}

/// Loads `config.input` and runs every stage.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineRun, PipelineError> {
    validate(config)?;
    let table = load_csv(&config.input, &config.required_columns()).map_err(fail(Stage::Load))?;
    let mut run = run_table(&table, config)?;
    run.input_path = Some(config.input.clone());
    Ok(run)
}

fn validate(config: &PipelineConfig) -> Result<(), PipelineError> {
    let bad = |msg: String| PipelineError {
        stage: Stage::Config,
        source: Error::Config(msg),
    };
    if config.columns.is_empty() {
        return Err(bad("no columns selected".into()));
    }
    if let Some(Rate::Column(c)) = &config.adjust_rate {
        if config.columns.contains(c) {
            return Err(bad(format!("rate column {c:?} cannot also be clustered")));
        }
    }
    Ok(())
}

/// Runs every stage on an already loaded table. `config.input` is only echoed.
pub fn run_table(
    table: &IndicatorTable,
    config: &PipelineConfig,
) -> Result<PipelineRun, PipelineError> {
    validate(config)?;
    let reference = config
        .reference_column()
        .expect("validated non-empty columns")
        .to_string();
    let mut keep: Vec<&str> = config.columns.iter().map(String::as_str).collect();
    if !keep.contains(&reference.as_str()) {
        keep.push(&reference);
    }
    let adjust_targets = keep.clone();
    if let Some(Rate::Column(c)) = &config.adjust_rate {
        keep.push(c);
    }
    let loaded = table.select(&keep).map_err(fail(Stage::Load))?;

    let (imputed, imputed_cells) = impute_missing(&loaded).map_err(fail(Stage::Impute))?;
    let (observed, working) = match &config.adjust_rate {
        Some(rate) => (
            adjust_for_rate(&loaded, rate, &adjust_targets).map_err(fail(Stage::Adjust))?,
            adjust_for_rate(&imputed, rate, &adjust_targets).map_err(fail(Stage::Adjust))?,
        ),
        None => (loaded, imputed),
    };
    let working = working
        .select(&adjust_targets)
        .map_err(fail(Stage::Adjust))?;

    let stats = adjust_targets
        .iter()
        .map(|name| {
            let col = observed.require_column(name)?;
            Ok((name.to_string(), describe(&col.observed_values())?))
        })
        .collect::<Result<Vec<_>, DatasetError>>()
        .map_err(fail(Stage::Describe))?;

    let cluster_cols: Vec<&str> = config.columns.iter().map(String::as_str).collect();
    let features = standardize(
        &working
            .select(&cluster_cols)
            .map_err(fail(Stage::Standardize))?,
    )
    .map_err(fail(Stage::Standardize))?;

    let sigma = match config.sigma {
        SigmaChoice::Auto => {
            median_heuristic_sigma(features.view()).map_err(fail(Stage::Affinity))?
        }
        SigmaChoice::Fixed(s) => s,
    };
    let mut similarity =
        gaussian_similarity(features.view(), sigma).map_err(fail(Stage::Affinity))?;
    if let Some(k) = config.knn {
        similarity = knn_sparsify(&similarity, k).map_err(fail(Stage::Affinity))?;
    }

    let lap = laplacian(&similarity, config.laplacian).map_err(fail(Stage::Laplacian))?;
    let eigen = lap.eigen().map_err(fail(Stage::Eigen))?;

    let n = working.len();
    let row_normalize = config
        .row_normalize
        .unwrap_or_else(|| config.laplacian.default_row_normalize());
    let sweep_config = SweepConfig {
        variant: config.laplacian,
        row_normalize,
        kmeans: config.kmeans_params(2),
        space: config.silhouette_space,
    };
    let mut sweep = match config.k_range {
        None if n < 3 => eigengap_only(&eigen, config.silhouette_space)?,
        range => sweep_eigensystem(
            &eigen,
            range.unwrap_or_else(|| KRange::default_for(n)),
            &sweep_config,
            Some(features.view()),
        )
        .map_err(fail(Stage::Selection))?,
    };

    let k_used = match config.k {
        KChoice::Auto => sweep.report.chosen_k,
        KChoice::Fixed(k) => k,
    };
    let (embedding, clustering, silhouette_at_k) = match sweep.candidates.remove(&k_used) {
        Some(c) => (c.embedding, c.clustering, Some(c.silhouette)),
        None => fixed_k(&eigen, k_used, &sweep_config, &features)?,
    };

    let category_names = config
        .category_names
        .clone()
        .unwrap_or_else(|| default_category_names(k_used));
    let reference_values = working
        .require_column(&reference)
        .map_err(fail(Stage::Categories))?
        .complete_values()
        .expect("imputed column is complete");
    let categories = label_categories(
        working.entity_ids(),
        &clustering.labels,
        &reference_values,
        &category_names,
    )
    .map_err(fail(Stage::Categories))?;
    let shares = category_shares(&categories).map_err(fail(Stage::Categories))?;

    Ok(PipelineRun {
        config: config.clone(),
        input_path: None,
        table: working,
        imputed_cells,
        stats,
        features,
        similarity,
        row_normalize,
        eigen,
        selection: sweep.report,
        k_used,
        embedding,
        clustering,
        silhouette: silhouette_at_k,
        reference,
        category_names,
        categories,
        shares,
    })
}

/// Too few entities for a silhouette sweep: the eigen-gap picks from
/// `[1, n − 1]` and no candidates are scored.
fn eigengap_only(eigen: &EigenSystem, space: SilhouetteSpace) -> Result<Sweep, PipelineError> {
    let gaps = eigen_gaps(eigen.eigenvalues()).map_err(fail(Stage::Selection))?;
    let hi = eigen.n() - 1;
    let chosen_k = optimal_k_eigengap(&gaps, 1, hi).map_err(fail(Stage::Selection))?;
    Ok(Sweep {
        report: SelectionReport {
            eigenvalues: eigen.eigenvalues().to_vec(),
            gaps,
            chosen_k,
            k_range: KRange::new(1, hi),
            silhouette_by_k: Default::default(),
            silhouette_space: space,
        },
        candidates: Default::default(),
    })
}

/// Clusters at a k outside the sweep range.
fn fixed_k(
    eigen: &EigenSystem,
    k: usize,
    config: &SweepConfig,
    features: &FeatureMatrix,
) -> Result<(SpectralEmbedding, ClusteringResult, Option<f64>), PipelineError> {
    let n = eigen.n();
    if k >= 2 && k < n {
        let c =
            evaluate_k(eigen, k, config, Some(features.view())).map_err(fail(Stage::Clustering))?;
        return Ok((c.embedding, c.clustering, Some(c.silhouette)));
    }
    let embedding =
        crate::spectral::embed(eigen, k, config.row_normalize).map_err(fail(Stage::Clustering))?;
    let clustering = crate::kmeans::kmeans(
        embedding.matrix().view(),
        &KMeansParams { k, ..config.kmeans },
    )
    .map_err(fail(Stage::Clustering))?;
    // k = 1 or k = n: the silhouette is undefined or identically zero
    let s = if k == n && n >= 2 {
        silhouette(embedding.matrix().view(), &clustering.labels)
            .ok()
            .map(|s| s.mean)
    } else {
        None
    };
    Ok((embedding, clustering, s))
}

/// Where and what to write after a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputOptions {
    pub out_dir: PathBuf,
    pub plots: bool,
    pub dump_matrices: bool,
}

impl OutputOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        OutputOptions {
            out_dir: out_dir.into(),
            plots: false,
            dump_matrices: false,
        }
    }
}

/// Writes the report files (and optionally plots and matrix dumps) for `run`.
pub fn emit(run: &PipelineRun, output: &OutputOptions) -> Result<Vec<PathBuf>, PipelineError> {
    let wrap = |e: ReportError| PipelineError::at(Stage::Emit)(e.into());
    let mut files = emit_report(run, &output.out_dir).map_err(wrap)?;
    if output.plots {
        files.extend(emit_plots(&run.selection, &output.out_dir).map_err(wrap)?);
    }
    if output.dump_matrices {
        files.extend(emit_matrices(run, &output.out_dir).map_err(wrap)?);
    }
    Ok(files)
}

/// [`run_pipeline`] followed by [`emit`].
pub fn execute(
    config: &PipelineConfig,
    output: &OutputOptions,
) -> Result<(PipelineRun, Vec<PathBuf>), PipelineError> {
    let run = run_pipeline(config)?;
    let files = emit(&run, output)?;
    Ok((run, files))
}

/// Trade indicators analysed one at a time by [`reproduce_paper`].
pub const TRADE_INDICATORS: [&str; 3] = ["export", "import", "net_export"];

/// Suffix of pre-computed rate-adjusted columns in the input CSV.
pub const ADJUSTED_SUFFIX: &str = "_adjusted";

#[derive(Debug, Clone, PartialEq)]
pub struct ReproduceOptions {
    pub seed: u64,
    pub plots: bool,
    /// Used to derive adjusted indicators that are not present as
    /// `<indicator>_adjusted` columns.
    pub adjust_rate: Option<Rate>,
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        ReproduceOptions {
            seed: KMeansParams::DEFAULT_SEED,
            plots: true,
            adjust_rate: None,
        }
    }
}

/// One per-indicator analysis in the recipe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorOutcome {
    pub analysis: String,
    pub column: String,
    pub adjusted: bool,
    pub eigengap_k: usize,
    pub k: usize,
    pub silhouette_by_k: std::collections::BTreeMap<usize, f64>,
    pub shares: Vec<Share>,
    pub lowest: String,
    pub highest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReproduceSummary {
    pub schema: u32,
    pub input: String,
    pub entities: usize,
    pub analyses: Vec<IndicatorOutcome>,
}

/// Clusters each trade indicator (raw and rate-adjusted) separately with
/// automatic k over `[2, 5]`, writing one report directory per analysis plus
/// `descriptive_stats.csv` and `overview.json` into `out_dir`.
///
/// The input needs `entity_id,export,import,net_export`; adjusted variants come
/// from `<indicator>_adjusted` columns or from `options.adjust_rate`.
pub fn reproduce_paper(
    input: &Path,
    out_dir: &Path,
    options: &ReproduceOptions,
) -> Result<ReproduceSummary, PipelineError> {
    let table = load_csv(input, &[]).map_err(fail(Stage::Load))?;
    for name in TRADE_INDICATORS {
        table.require_column(name).map_err(fail(Stage::Load))?;
    }

    let mut plans: Vec<(String, String, Option<Rate>)> = Vec::new();
    for name in TRADE_INDICATORS {
        plans.push((name.to_string(), name.to_string(), None));
    }
    for name in TRADE_INDICATORS {
        let adjusted = format!("{name}{ADJUSTED_SUFFIX}");
        if table.column(&adjusted).is_some() {
            plans.push((adjusted.clone(), adjusted, None));
        } else if let Some(rate) = &options.adjust_rate {
            plans.push((adjusted, name.to_string(), Some(rate.clone())));
        }
    }

    let mut stats_rows = Vec::new();
    let mut analyses = Vec::new();
    for (analysis, column, rate) in plans {
        let mut config = PipelineConfig::new(input, &[column.as_str()]);
        config.seed = options.seed;
        config.k_range = Some(KRange::new(2, 5.min(table.len().saturating_sub(1))));
        config.adjust_rate = rate.clone();
        let mut run = run_table(&table, &config)?;
        run.input_path = Some(input.to_path_buf());
        emit(
            &run,
            &OutputOptions {
                out_dir: out_dir.join(&analysis),
                plots: options.plots,
                dump_matrices: false,
            },
        )?;
        stats_rows.push((analysis.clone(), run.stats[0].1));
        let ranks = run.categories.ranks();
        analyses.push(IndicatorOutcome {
            analysis,
            column,
            adjusted: rate.is_some() || config.columns[0].ends_with(ADJUSTED_SUFFIX),
            eigengap_k: run.selection.chosen_k,
            k: run.k_used,
            silhouette_by_k: run.selection.silhouette_by_k.clone(),
            shares: run.shares.shares.clone(),
            lowest: ranks
                .first()
                .map(|r| r.category.clone())
                .unwrap_or_default(),
            highest: ranks.last().map(|r| r.category.clone()).unwrap_or_default(),
        });
    }

    let summary = ReproduceSummary {
        schema: crate::report::SCHEMA_VERSION,
        input: input.display().to_string(),
        entities: table.len(),
        analyses,
    };
    let wrap = |path: PathBuf| {
        move |e: std::io::Error| {
            PipelineError::at(Stage::Emit)(Error::Report(ReportError::Io {
                path,
                message: e.to_string(),
            }))
        }
    };
    std::fs::create_dir_all(out_dir).map_err(wrap(out_dir.to_path_buf()))?;
    let stats_path = out_dir.join("descriptive_stats.csv");
    crate::io::write_atomic(
        &stats_path,
        crate::dataset::stats_csv(&stats_rows).as_bytes(),
    )
    .map_err(wrap(stats_path.clone()))?;
    let mut json = serde_json::to_string_pretty(&summary).expect("overview serializes");
    json.push('\n');
    let overview = out_dir.join("overview.json");
    crate::io::write_atomic(&overview, json.as_bytes()).map_err(wrap(overview.clone()))?;
    Ok(summary)
}
