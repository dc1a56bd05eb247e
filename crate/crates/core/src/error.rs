use std::path::PathBuf;

/// Errors raised across the toolkit.
///
/// `Contract` covers precondition breaches (bad arguments, misaligned inputs);
/// the remaining variants name a concrete failure that callers may want to
/// match on.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),

    #[error("validation error at row {row}: {msg}")]
    Validation { row: usize, msg: String },

    #[error("unparseable timestamps at rows {rows:?}")]
    BadTimestamps { rows: Vec<usize> },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("motif bank is empty: no motifs above threshold in the supplied traces")]
    EmptyBank,

    #[error("user model has not been fitted")]
    UnfittedModel,

    #[error("defense `{0}` is already registered")]
    DuplicateDefense(String),

    #[error("unknown defense `{0}`")]
    UnknownDefense(String),

    #[error("defense `{name}` produced an invalid outcome: {msg}")]
    InvalidOutcome { name: String, msg: String },

    #[error("model container: {0}")]
    Container(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Attach a pipeline stage name to an error.
pub(crate) trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
