use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("csv header mismatch: expected {expected:?}, found {found:?}")]
    HeaderMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("row {row}, column `{column}`: cannot parse {value:?} as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("column `{0}` has no non-missing values")]
    AllMissing(String),

    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),

    #[error("column `{0}` has missing cells")]
    MissingCells(String),

    #[error("column `{column}` is {found}, expected {expected}")]
    ColumnKind {
        column: String,
        expected: &'static str,
        found: &'static str,
    },

    #[error("denominator `{column}` is not strictly positive in rows {rows:?}")]
    NonPositiveDenominator { column: String, rows: Vec<usize> },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("design matrix is rank deficient; dependent columns: {0:?}")]
    RankDeficient(Vec<String>),

    #[error("dimension mismatch: expected {expected} features, received {received}")]
    DimensionMismatch { expected: usize, received: usize },

    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("kernel matrix for {n} rows exceeds the limit of {limit} rows")]
    KernelTooLarge { n: usize, limit: usize },

    #[error("base model {index} failed: {source}")]
    BaseModel {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("r2 undefined: target has zero variance (mae {mae}, mse {mse})")]
    UndefinedR2 { mae: f64, mse: f64 },

    #[error("degenerate inertia curve: every k gives inertia {0}")]
    DegenerateCurve(f64),

    #[error("operation not supported for model family `{0}`")]
    UnsupportedFamily(String),

    #[error("feature pipeline mismatch: model `{model}` uses {found}, expected {expected}")]
    PipelineMismatch {
        model: String,
        expected: String,
        found: String,
    },

    #[error("bundle checksum mismatch (file truncated or corrupted)")]
    Checksum,

    #[error("unsupported bundle version `{0}`")]
    BundleVersion(String),

    #[error("bundle schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input rather than by a failure inside the library.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Divergence { .. })
    }
}
