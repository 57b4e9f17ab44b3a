use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("input is not valid UTF-8 at row {row}")]
    Utf8 { row: usize },

    #[error("ragged row {row}: expected {expected} cells, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("malformed delimited text near row {row}: {message}")]
    Malformed { row: usize, message: String },

    #[error("header column {column} has an empty name")]
    EmptyHeaderName { column: usize },

    #[error("duplicate header name '{0}'")]
    DuplicateHeader(String),

    #[error("target column '{0}' not found in header")]
    MissingTarget(String),

    #[error("non-numeric target at row {row}: '{value}'")]
    NonNumericTarget { row: usize, value: String },

    #[error("table has no parameter columns besides the target")]
    NoParameters,

    #[error("row {row}, column '{column}': value '{value}' is not in the schema vocabulary")]
    UnknownCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("unknown parameter '{0}'")]
    UnknownParameter(String),

    #[error("parameter '{parameter}' has no level '{level}'")]
    UnknownLevel { parameter: String, level: String },

    #[error("active parameter '{0}' has an empty selected level set")]
    EmptySelection(String),

    #[error("parameter '{0}' appears more than once in the selection")]
    DuplicateParameter(String),

    #[error("invalid level ordering line {line}: {message}")]
    BadOrdering { line: usize, message: String },

    #[error("record index {index} out of range for {len} records")]
    RecordOutOfRange { index: usize, len: usize },

    #[error("stage index {index} out of range for a chain of {len} stages")]
    StageOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
