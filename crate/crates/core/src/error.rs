use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The scenario document does not match the schema (missing field, wrong type).
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },

    /// An id in the document does not resolve to a declared entity.
    #[error("unknown {kind} `{id}` referenced at `{path}`")]
    Reference {
        path: String,
        kind: &'static str,
        id: String,
    },

    /// The document parsed but breaks a domain invariant.
    #[error("invalid value at `{path}`: {message}")]
    Invariant { path: String, message: String },

    #[error("span {span} outside 1..={span_count}")]
    SpanOutOfRange { span: usize, span_count: usize },

    /// A modelling device was called with arguments it cannot honour.
    #[error("model construction: {0}")]
    Model(String),

    #[error("backend `{backend}` unavailable: {message}")]
    BackendMissing { backend: String, message: String },

    #[error("backend `{backend}` failed: {message}")]
    Backend { backend: String, message: String },

    #[error("variable `{name}` should be binary but has value {value}")]
    FractionalBinary { name: String, value: f64 },

    #[error("schedule does not match scenario: {0}")]
    Dimension(String),

    #[error("instance too large for exhaustive search: {0}")]
    InstanceTooLarge(String),

    /// The instance uses a feature the exhaustive oracle does not enumerate.
    #[error("oracle does not support this instance: {0}")]
    OracleUnsupported(String),

    #[error("malformed model file at line {line}: {message}")]
    ModelFile { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invariant(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invariant {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn reference(path: impl Into<String>, kind: &'static str, id: &str) -> Self {
        Error::Reference {
            path: path.into(),
            kind,
            id: id.to_string(),
        }
    }
}
