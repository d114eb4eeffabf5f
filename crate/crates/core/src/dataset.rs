//! Indicator tables: CSV ingest, imputation, rate adjustment, standardization
//! and descriptive statistics.
//!
//! Input CSVs are UTF-8 with a header row whose first column is `entity_id`;
//! the remaining columns are numeric. An empty cell or the literal `NA` marks
//! a missing value, and so does any other cell that fails to parse as a number.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use ndarray::{Array2, ArrayView2};
use serde::Serialize;
use thiserror::Error;

use crate::io::write_atomic;

/// Name of the mandatory identifier column.
pub const ENTITY_ID: &str = "entity_id";

/// Unit annotation appended by [`adjust_for_rate`].
pub const RATE_ADJUSTED: &str = "rate-adjusted";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("input file not found: {0}")]
    MissingFile(PathBuf),
    #[error("failed to read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("duplicate entity id {0:?}")]
    DuplicateEntityId(String),
    #[error("empty entity id on data row {0}")]
    EmptyEntityId(usize),
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("column {column:?} has {got} values but the table has {expected} entities")]
    LengthMismatch {
        column: String,
        expected: usize,
        got: usize,
    },
    #[error("table has no numeric columns")]
    NoColumns,
    #[error("non-positive exchange rate {value} for entity {entity:?}")]
    NonPositiveRate { entity: Option<String>, value: f64 },
    #[error("missing exchange rate for entity {0:?}")]
    MissingRate(String),
    #[error("column {0:?} has no observed values")]
    AllMissingColumn(String),
    #[error("column {0:?} still has missing values")]
    MissingValues(String),
    #[error("cannot describe an empty column")]
    EmptyColumn,
    #[error("column contains a non-finite value")]
    NonFinite,
    #[error("failed to write {path}: {message}")]
    Write { path: PathBuf, message: String },
}

impl DatasetError {
    pub fn kind(&self) -> &'static str {
        match self {
            DatasetError::MissingFile(_) => "MissingFile",
            DatasetError::Read { .. } => "ReadError",
            DatasetError::DuplicateEntityId(_) => "DuplicateEntityId",
            DatasetError::EmptyEntityId(_) => "EmptyEntityId",
            DatasetError::MissingColumn(_) => "MissingColumn",
            DatasetError::LengthMismatch { .. } => "LengthMismatch",
            DatasetError::NoColumns => "NoColumns",
            DatasetError::NonPositiveRate { .. } => "NonPositiveRate",
            DatasetError::MissingRate(_) => "MissingRate",
            DatasetError::AllMissingColumn(_) => "AllMissingColumn",
            DatasetError::MissingValues(_) => "MissingValues",
            DatasetError::EmptyColumn => "EmptyColumn",
            DatasetError::NonFinite => "NonFinite",
            DatasetError::Write { .. } => "IoError",
        }
    }
}

/// One named indicator; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<Option<f64>>,
    pub unit: String,
}

impl Column {
    pub fn new(name: impl Into<String>, values: Vec<Option<f64>>) -> Self {
        Column {
            name: name.into(),
            values,
            unit: String::new(),
        }
    }

    /// Column without missing cells.
    pub fn observed(name: impl Into<String>, values: &[f64]) -> Self {
        Column::new(name, values.iter().copied().map(Some).collect())
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = unit.into();
        self
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// The non-missing values, in row order.
    pub fn observed_values(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    /// All values, or `None` if any cell is missing.
    pub fn complete_values(&self) -> Option<Vec<f64>> {
        self.values.iter().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub source: Option<PathBuf>,
    pub loaded_at: Option<SystemTime>,
}

/// Entities (rows) with named numeric indicator columns.
///
/// Entity ids are unique and non-empty, and every column has one value per
/// entity. Tables are immutable once built; the transforming operations in this
/// module return new tables.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorTable {
    entity_ids: Vec<String>,
    columns: Vec<Column>,
    provenance: Provenance,
}

impl IndicatorTable {
    pub fn new(entity_ids: Vec<String>, columns: Vec<Column>) -> Result<Self, DatasetError> {
        if columns.is_empty() {
            return Err(DatasetError::NoColumns);
        }
        let mut seen = HashSet::with_capacity(entity_ids.len());
        for (row, id) in entity_ids.iter().enumerate() {
            if id.is_empty() {
                return Err(DatasetError::EmptyEntityId(row + 1));
            }
            if !seen.insert(id.as_str()) {
                return Err(DatasetError::DuplicateEntityId(id.clone()));
            }
        }
        for c in &columns {
            if c.values.len() != entity_ids.len() {
                return Err(DatasetError::LengthMismatch {
                    column: c.name.clone(),
                    expected: entity_ids.len(),
                    got: c.values.len(),
                });
            }
        }
        Ok(IndicatorTable {
            entity_ids,
            columns,
            provenance: Provenance::default(),
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn len(&self) -> usize {
        self.entity_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entity_ids.is_empty()
    }

    pub fn entity_ids(&self) -> &[String] {
        &self.entity_ids
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn require_column(&self, name: &str) -> Result<&Column, DatasetError> {
        self.column(name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    }

    /// A new table restricted to `names`, in that order.
    pub fn select(&self, names: &[&str]) -> Result<IndicatorTable, DatasetError> {
        let columns = names
            .iter()
            .map(|n| self.require_column(n).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(IndicatorTable::new(self.entity_ids.clone(), columns)?
            .with_provenance(self.provenance.clone()))
    }

    pub fn missing_count(&self) -> usize {
        self.columns.iter().map(Column::missing_count).sum()
    }

    /// Serializes the table in the same CSV dialect [`load_csv`] reads.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(ENTITY_ID);
        for c in &self.columns {
            out.push(',');
            out.push_str(&csv_field(&c.name));
        }
        out.push('\n');
        for (row, id) in self.entity_ids.iter().enumerate() {
            out.push_str(&csv_field(id));
            for c in &self.columns {
                out.push(',');
                match c.values[row] {
                    Some(v) => write!(out, "{v}").unwrap(),
                    None => out.push_str("NA"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), DatasetError> {
        write_atomic(path, self.to_csv_string().as_bytes()).map_err(|e| DatasetError::Write {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn parse_cell(cell: &str) -> Option<f64> {
    let t = cell.trim();
    if t.is_empty() || t == "NA" {
        return None;
    }
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Loads an indicator CSV keeping only the columns named in `schema` (in that
/// order). An empty `schema` keeps every column after `entity_id`.
pub fn load_csv(path: &Path, schema: &[&str]) -> Result<IndicatorTable, DatasetError> {
    if !path.is_file() {
        return Err(DatasetError::MissingFile(path.to_path_buf()));
    }
    let read_err = |e: &dyn std::fmt::Display| DatasetError::Read {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::Headers)
        .from_path(path)
        .map_err(|e| read_err(&e))?;
    let headers = reader.headers().map_err(|e| read_err(&e))?.clone();
    let header_names: Vec<&str> = headers
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}'))
        .collect();
    if header_names.first() != Some(&ENTITY_ID) {
        return Err(DatasetError::MissingColumn(ENTITY_ID.to_string()));
    }
    let wanted: Vec<&str> = if schema.is_empty() {
        header_names[1..].to_vec()
    } else {
        schema.to_vec()
    };
    let positions = wanted
        .iter()
        .map(|name| {
            header_names[1..]
                .iter()
                .position(|h| h == name)
                .map(|p| p + 1)
                .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut ids = Vec::new();
    let mut values: Vec<Vec<Option<f64>>> = vec![Vec::new(); wanted.len()];
    for record in reader.records() {
        let record = record.map_err(|e| read_err(&e))?;
        ids.push(record.get(0).unwrap_or("").trim().to_string());
        for (slot, &pos) in values.iter_mut().zip(&positions) {
            slot.push(record.get(pos).and_then(parse_cell));
        }
    }
    let columns = wanted
        .iter()
        .zip(values)
        .map(|(name, v)| Column::new(*name, v))
        .collect();
    Ok(
        IndicatorTable::new(ids, columns)?.with_provenance(Provenance {
            source: Some(path.to_path_buf()),
            loaded_at: Some(SystemTime::now()),
        }),
    )
}

/// Divisor used by [`adjust_for_rate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Rate {
    Scalar(f64),
    /// Per-entity rates read from the named column.
    Column(String),
}

impl std::str::FromStr for Rate {
    type Err = std::convert::Infallible;

    /// Numbers become [`Rate::Scalar`], anything else names a column.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().parse::<f64>() {
            Ok(v) => Rate::Scalar(v),
            Err(_) => Rate::Column(s.trim().to_string()),
        })
    }
}

/// Divides each column in `columns` by `rate` and marks its unit as
/// rate-adjusted. Missing cells stay missing.
pub fn adjust_for_rate(
    table: &IndicatorTable,
    rate: &Rate,
    columns: &[&str],
) -> Result<IndicatorTable, DatasetError> {
    let n = table.len();
    let divisors: Vec<f64> = match rate {
        Rate::Scalar(r) => {
            if !(*r > 0.0 && r.is_finite()) {
                return Err(DatasetError::NonPositiveRate {
                    entity: None,
                    value: *r,
                });
            }
            vec![*r; n]
        }
        Rate::Column(name) => {
            let col = table.require_column(name)?;
            col.values
                .iter()
                .zip(table.entity_ids())
                .map(|(v, id)| match v {
                    None => Err(DatasetError::MissingRate(id.clone())),
                    Some(r) if *r > 0.0 => Ok(*r),
                    Some(r) => Err(DatasetError::NonPositiveRate {
                        entity: Some(id.clone()),
                        value: *r,
                    }),
                })
                .collect::<Result<_, _>>()?
        }
    };
    for name in columns {
        table.require_column(name)?;
    }
    let adjusted = table
        .columns()
        .iter()
        .map(|c| {
            if !columns.contains(&c.name.as_str()) {
                return c.clone();
            }
            let values = c
                .values
                .iter()
                .zip(&divisors)
                .map(|(v, r)| v.map(|v| v / r))
                .collect();
            let unit = if c.unit.is_empty() {
                RATE_ADJUSTED.to_string()
            } else {
                format!("{} ({RATE_ADJUSTED})", c.unit)
            };
            Column {
                name: c.name.clone(),
                values,
                unit,
            }
        })
        .collect();
    Ok(IndicatorTable::new(table.entity_ids().to_vec(), adjusted)?
        .with_provenance(table.provenance().clone()))
}

/// Replaces missing cells by the median of the observed values in the same
/// column. Returns the new table and the number of cells filled.
pub fn impute_missing(table: &IndicatorTable) -> Result<(IndicatorTable, usize), DatasetError> {
    let mut filled = 0;
    let mut columns = Vec::with_capacity(table.columns().len());
    for c in table.columns() {
        let missing = c.missing_count();
        if missing == 0 {
            columns.push(c.clone());
            continue;
        }
        let observed = c.observed_values();
        if observed.is_empty() {
            return Err(DatasetError::AllMissingColumn(c.name.clone()));
        }
        let fill = median(&observed);
        filled += missing;
        columns.push(Column {
            name: c.name.clone(),
            values: c.values.iter().map(|v| Some(v.unwrap_or(fill))).collect(),
            unit: c.unit.clone(),
        });
    }
    Ok((
        IndicatorTable::new(table.entity_ids().to_vec(), columns)?
            .with_provenance(table.provenance().clone()),
        filled,
    ))
}

/// Per-column affine map used by [`standardize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scaling {
    pub mean: f64,
    pub sd: f64,
}

/// The n×d matrix of standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Array2<f64>,
    feature_names: Vec<String>,
    scaling: Vec<Scaling>,
}

impl FeatureMatrix {
    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn scaling(&self) -> &[Scaling] {
        &self.scaling
    }

    /// Maps standardized values back to the original units.
    pub fn inverse_transform(&self) -> Array2<f64> {
        let mut out = self.data.clone();
        for (mut col, s) in out.columns_mut().into_iter().zip(&self.scaling) {
            col.mapv_inplace(|z| z * s.sd + s.mean);
        }
        out
    }
}

/// Population standard deviation at or below this fraction of the column's
/// magnitude is treated as a constant column.
const CONSTANT_COLUMN_RTOL: f64 = 1e-12;

/// Z-scores every column using the population standard deviation.
///
/// Constant columns become all zeros with `sd` recorded as 1.
pub fn standardize(table: &IndicatorTable) -> Result<FeatureMatrix, DatasetError> {
    let n = table.len();
    let d = table.columns().len();
    let mut data = Array2::zeros((n, d));
    let mut scaling = Vec::with_capacity(d);
    for (j, c) in table.columns().iter().enumerate() {
        let values = c
            .complete_values()
            .ok_or_else(|| DatasetError::MissingValues(c.name.clone()))?;
        let (mean, sd) = mean_and_population_sd(&values);
        let constant = sd <= CONSTANT_COLUMN_RTOL * mean.abs().max(1.0);
        let sd = if constant { 1.0 } else { sd };
        for (i, v) in values.iter().enumerate() {
            data[[i, j]] = if constant { 0.0 } else { (v - mean) / sd };
        }
        scaling.push(Scaling { mean, sd });
    }
    Ok(FeatureMatrix {
        data,
        feature_names: table.columns().iter().map(|c| c.name.clone()).collect(),
        scaling,
    })
}

fn mean_and_population_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Median of a non-empty slice; even lengths average the two middle values.
pub(crate) fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    median_of_sorted(&sorted)
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Summary statistics laid out like a descriptive-statistics table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescriptiveStats {
    pub mean: f64,
    pub median: f64,
    /// Population standard deviation.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

/// Mean, median, population sd, min and max of `column`.
///
/// All sums run over the sorted values, so the result does not depend on the
/// order of the input.
pub fn describe(column: &[f64]) -> Result<DescriptiveStats, DatasetError> {
    if column.is_empty() {
        return Err(DatasetError::EmptyColumn);
    }
    if column.iter().any(|v| !v.is_finite()) {
        return Err(DatasetError::NonFinite);
    }
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    let (mean, sd) = mean_and_population_sd(&sorted);
    Ok(DescriptiveStats {
        mean: mean.clamp(min, max),
        median: median_of_sorted(&sorted),
        sd,
        min,
        max,
    })
}

/// Renders `variable,mean,median,sd,min,max` rows.
pub fn stats_csv(rows: &[(String, DescriptiveStats)]) -> String {
    let mut out = String::from("variable,mean,median,sd,min,max\n");
    for (name, s) in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            csv_field(name),
            s.mean,
            s.median,
            s.sd,
            s.min,
            s.max
        )
        .unwrap();
    }
    out
}
