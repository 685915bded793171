use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("empty input")]
    EmptyInput,

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Engine(#[from] oneshotstl::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
