use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),
    #[error("id column `{0}` not found in header")]
    MissingIdColumn(String),
    #[error("cell at row {row}, column `{column}` is not numeric: {value:?}")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("table has no data rows")]
    EmptyTable,
    #[error("duplicate sample id `{0}`")]
    DuplicateId(String),
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u16),
    #[error("file truncated")]
    TruncatedFile,
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("flow table and host tensors share no sample ids")]
    EmptyIntersection,
    #[error("unknown class label `{0}`")]
    UnknownLabel(String),
    #[error("invalid label map: {0}")]
    InvalidLabelMap(String),
    #[error("class `{0}` has fewer than 2 samples")]
    ClassTooSmall(String),
    #[error("test fraction must lie in (0, 1), got {0}")]
    InvalidFraction(f64),
    #[error("dataset contains no attack samples")]
    NoAttackSamples,
    #[error("selection plan does not fit the host matrix: {0}")]
    SelectionOutOfRange(String),
    #[error("selection target {target:?} exceeds source {source_dims:?}")]
    TargetExceedsSource {
        source_dims: (usize, usize),
        target: (usize, usize),
    },
    #[error("k = {k} exceeds the admissible maximum {max}")]
    KTooLarge { k: usize, max: usize },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("training labels contain a single class")]
    SingleClassInput,
    #[error("non-finite feature at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("cascade needs at least two attack classes, found {0}")]
    FewerThanTwoAttackClasses(usize),
    #[error("invalid synthetic spec: {0}")]
    SpecInvalid(String),
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    RawIo(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Process exit status categories used by the command line driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

impl ErrorKind {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numeric => 4,
        }
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::ConfigInvalid(_)
            | Error::InvalidParams(_)
            | Error::InvalidFraction(_)
            | Error::SpecInvalid(_)
            | Error::TargetExceedsSource { .. }
            | Error::KTooLarge { .. } => ErrorKind::Config,
            Error::DegenerateData(_) | Error::Numeric(_) => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }
}
