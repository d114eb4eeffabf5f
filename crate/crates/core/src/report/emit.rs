use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{ReportError, Share};
use crate::dataset::{csv_field, DescriptiveStats};
use crate::io::write_atomic;
use crate::pipeline::{PipelineRun, SigmaChoice};
use crate::selection::SelectionReport;

/// Version tag written at the top of `summary.json`.
pub const SCHEMA_VERSION: u32 = 1;

fn io_err(path: &Path, e: impl std::fmt::Display) -> ReportError {
    ReportError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, ReportError> {
    let path = dir.join(name);
    write_atomic(&path, contents.as_bytes()).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// `entity_id,<indicators…>,cluster,category`, one row per entity.
pub fn entities_csv(run: &PipelineRun) -> String {
    let mut out = String::from("entity_id");
    for c in run.table.columns() {
        out.push(',');
        out.push_str(&csv_field(&c.name));
    }
    out.push_str(",cluster,category\n");
    for (row, entry) in run.categories.entries().iter().enumerate() {
        out.push_str(&csv_field(&entry.entity_id));
        for c in run.table.columns() {
            match c.values[row] {
                Some(v) => write!(out, ",{v}").unwrap(),
                None => out.push_str(",NA"),
            }
        }
        writeln!(out, ",{},{}", entry.cluster, csv_field(&entry.category)).unwrap();
    }
    out
}

#[derive(Serialize)]
struct Summary<'a> {
    schema: u32,
    input: InputEcho<'a>,
    config: ConfigEcho<'a>,
    imputed_cells: usize,
    descriptive_stats: Vec<StatsRow<'a>>,
    selection: &'a SelectionReport,
    clustering: ClusteringEcho,
    categories: Vec<CategoryEcho<'a>>,
    shares: SharesEcho<'a>,
}

#[derive(Serialize)]
struct InputEcho<'a> {
    path: Option<String>,
    entities: usize,
    columns: &'a [String],
    units: BTreeMap<&'a str, &'a str>,
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    columns: &'a [String],
    reference: &'a str,
    adjust_rate: Option<&'a crate::dataset::Rate>,
    sigma_mode: &'static str,
    sigma: f64,
    knn: Option<usize>,
    laplacian: &'static str,
    row_normalize: bool,
    k_mode: &'static str,
    k_range: [usize; 2],
    seed: u64,
    restarts: usize,
    max_iter: usize,
    tol: f64,
    silhouette_space: crate::selection::SilhouetteSpace,
    category_names: &'a [String],
}

#[derive(Serialize)]
struct StatsRow<'a> {
    variable: &'a str,
    #[serde(flatten)]
    stats: DescriptiveStats,
}

#[derive(Serialize)]
struct ClusteringEcho {
    k: usize,
    eigengap_k: usize,
    inertia: f64,
    silhouette: Option<f64>,
    seed: u64,
    best_restart: usize,
    restarts_used: usize,
    iterations: usize,
    cluster_sizes: Vec<usize>,
}

#[derive(Serialize)]
struct CategoryEcho<'a> {
    category: &'a str,
    cluster: usize,
    count: usize,
    mean_reference: f64,
}

#[derive(Serialize)]
struct SharesEcho<'a> {
    total: usize,
    percent_sum: u32,
    shares: &'a [Share],
}

/// The run summary as pretty-printed JSON with a trailing newline.
pub fn summary_json(run: &PipelineRun) -> String {
    let cfg = &run.config;
    let summary = Summary {
        schema: SCHEMA_VERSION,
        input: InputEcho {
            path: run.input_path.as_ref().map(|p| p.display().to_string()),
            entities: run.table.len(),
            columns: &cfg.columns,
            units: run
                .table
                .columns()
                .iter()
                .map(|c| (c.name.as_str(), c.unit.as_str()))
                .collect(),
        },
        config: ConfigEcho {
            columns: &cfg.columns,
            reference: &run.reference,
            adjust_rate: cfg.adjust_rate.as_ref(),
            sigma_mode: match cfg.sigma {
                SigmaChoice::Auto => "auto",
                SigmaChoice::Fixed(_) => "fixed",
            },
            sigma: run.similarity.sigma(),
            knn: cfg.knn,
            laplacian: cfg.laplacian.as_str(),
            row_normalize: run.row_normalize,
            k_mode: match cfg.k {
                crate::pipeline::KChoice::Auto => "auto",
                crate::pipeline::KChoice::Fixed(_) => "fixed",
            },
            k_range: [run.selection.k_range.min, run.selection.k_range.max],
            seed: cfg.seed,
            restarts: cfg.restarts,
            max_iter: cfg.max_iter,
            tol: cfg.tol,
            silhouette_space: cfg.silhouette_space,
            category_names: &run.category_names,
        },
        imputed_cells: run.imputed_cells,
        descriptive_stats: run
            .stats
            .iter()
            .map(|(variable, stats)| StatsRow {
                variable,
                stats: *stats,
            })
            .collect(),
        selection: &run.selection,
        clustering: ClusteringEcho {
            k: run.k_used,
            eigengap_k: run.selection.chosen_k,
            inertia: run.clustering.inertia,
            silhouette: run.silhouette,
            seed: run.clustering.seed,
            best_restart: run.clustering.best_restart,
            restarts_used: run.clustering.restarts_used,
            iterations: run.clustering.iterations,
            cluster_sizes: run.clustering.cluster_sizes(),
        },
        categories: run
            .categories
            .ranks()
            .iter()
            .map(|r| CategoryEcho {
                category: &r.category,
                cluster: r.cluster,
                count: r.count,
                mean_reference: r.mean_reference,
            })
            .collect(),
        shares: SharesEcho {
            total: run.shares.total,
            percent_sum: run.shares.percent_sum(),
            shares: &run.shares.shares,
        },
    };
    let mut s = serde_json::to_string_pretty(&summary).expect("summary serializes");
    s.push('\n');
    s
}

/// Writes `entities.csv`, `summary.json` and `stats.csv` into `dir`.
pub fn emit_report(run: &PipelineRun, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    ensure_dir(dir)?;
    Ok(vec![
        write(dir, "entities.csv", &entities_csv(run))?,
        write(dir, "summary.json", &summary_json(run))?,
        write(dir, "stats.csv", &crate::dataset::stats_csv(&run.stats))?,
    ])
}

/// Writes `eigenvalues.svg`, `eigengaps.svg` and `silhouette.svg` into `dir`.
pub fn emit_plots(report: &SelectionReport, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    ensure_dir(dir)?;
    let by_k: Vec<(usize, f64)> = report
        .silhouette_by_k
        .iter()
        .map(|(&k, &s)| (k, s))
        .collect();
    Ok(vec![
        write(
            dir,
            "eigenvalues.svg",
            &super::scree_svg(&report.eigenvalues, Some(report.chosen_k)),
        )?,
        write(
            dir,
            "eigengaps.svg",
            &super::gap_svg(&report.gaps, report.chosen_k),
        )?,
        write(
            dir,
            "silhouette.svg",
            &super::silhouette_svg(&by_k, Some(report.chosen_k)),
        )?,
    ])
}

/// Debug dumps: `affinity.csv` (entity ids as row and column headers) and
/// `eigenvalues.csv`.
pub fn emit_matrices(run: &PipelineRun, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    ensure_dir(dir)?;
    let ids = run.table.entity_ids();
    let mut s = String::from("entity_id");
    for id in ids {
        s.push(',');
        s.push_str(&csv_field(id));
    }
    s.push('\n');
    for (id, row) in ids.iter().zip(run.similarity.matrix().rows()) {
        s.push_str(&csv_field(id));
        for v in row {
            write!(s, ",{v}").unwrap();
        }
        s.push('\n');
    }
    let mut e = String::from("index,eigenvalue\n");
    for (i, v) in run.eigen.eigenvalues().iter().enumerate() {
        writeln!(e, "{},{v}", i + 1).unwrap();
    }
    Ok(vec![
        write(dir, "affinity.csv", &s)?,
        write(dir, "eigenvalues.csv", &e)?,
    ])
}
