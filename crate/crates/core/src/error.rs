//! Errors for file-level data handling.

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("missing required column '{column}'{}", .row.map(|r| format!(" (row {r})")).unwrap_or_default())]
    MissingColumn {
        column: &'static str,
        row: Option<usize>,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("no records in split '{0}'")]
    EmptySplit(String),
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}
