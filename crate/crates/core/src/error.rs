use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bounding box {0:?}")]
    InvalidBBox([f64; 4]),
    #[error("invalid page: {0}")]
    InvalidPage(String),
    #[error("region `{0}` has zero area after clamping to the page")]
    DegenerateRegion(String),

    #[error("invalid tier: {0}")]
    InvalidTier(String),
    #[error("invalid source size {0}x{1}")]
    InvalidSourceSize(u32, u32),

    #[error("dimension mismatch: matrix is {matrix}x{matrix}, got {positions} positions")]
    DimensionMismatch { matrix: usize, positions: usize },
    #[error("order matrix is not square over {regions} regions: {detail}")]
    MatrixShapeMismatch { regions: usize, detail: String },
    #[error("invalid reading order: {0}")]
    InvalidOrder(String),

    #[error("page `{0}` carries no layout annotations")]
    MissingAnnotations(String),
    #[error("layout detector unavailable: {0}")]
    DetectorUnavailable(String),

    #[error("backend timed out after {attempts} attempt(s): {detail}")]
    BackendTimeout { attempts: u32, detail: String },
    #[error("backend error: {0}")]
    Backend(String),
    #[error("region `{0}` has no ground-truth content for the mock backend")]
    MissingGroundTruth(String),
    #[error("category {0} is not routed to a recognizer")]
    UnroutableCategory(String),
    #[error("page image unavailable: {0}")]
    MissingImage(String),
    #[error("every element of the batch failed: {0}")]
    BatchFailed(String),

    #[error("invalid OTSL: {0}")]
    InvalidOtsl(String),
    #[error("unsupported table markup: {0}")]
    UnsupportedMarkup(String),
    #[error("parse failure: {0}")]
    ParseFailure(String),

    #[error("recognized elements do not cover the routable regions: {0}")]
    CoverageMismatch(String),

    #[error("dataset {path}: {detail}")]
    Dataset { path: PathBuf, detail: String },
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
