use thiserror::Error;

use crate::affinity::AffinityError;
use crate::dataset::DatasetError;
use crate::kmeans::KMeansError;
use crate::report::ReportError;
use crate::selection::SelectionError;
use crate::spectral::SpectralError;

/// Any failure raised by one of the pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Affinity(#[from] AffinityError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    KMeans(#[from] KMeansError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Short, stable identifier of the error variant (e.g. `MissingFile`).
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dataset(e) => e.kind(),
            Error::Affinity(e) => e.kind(),
            Error::Spectral(e) => e.kind(),
            Error::KMeans(e) => e.kind(),
            Error::Selection(e) => e.kind(),
            Error::Report(e) => e.kind(),
            Error::Config(_) => "InvalidConfig",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
