use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("likert rating {0} outside 1..=5")]
    LikertOutOfRange(i64),

    #[error("{field}: expected {expected} time steps, found {found}")]
    SeriesLength {
        field: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate quantile edges: all values equal {0}")]
    DegenerateEdges(f64),

    #[error("variable `{name}`: {source}")]
    Variable {
        name: String,
        #[source]
        source: Box<Error>,
    },

    #[error("graph contains a cycle: {}", format_cycle(.0))]
    Cycle(Vec<String>),

    #[error("evidence has zero probability under the model")]
    ImpossibleEvidence,

    #[error("unsupported model format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_cycle(nodes: &[String]) -> String {
    let mut s = nodes.join(" -> ");
    if let Some(first) = nodes.first() {
        s.push_str(" -> ");
        s.push_str(first);
    }
    s
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }

    pub(crate) fn in_variable(self, name: &str) -> Self {
        Error::Variable {
            name: name.to_string(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by malformed or inconsistent input data rather
    /// than I/O failures.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Io(_) => false,
            Error::Variable { source, .. } => source.is_data_error(),
            _ => true,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
