use thiserror::Error;

/// One problem found while validating a scenario document.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SchemaIssue {
    /// JSON pointer to the offending value.
    pub pointer: String,
    pub message: String,
}

impl std::fmt::Display for SchemaIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.pointer.is_empty() {
            write!(f, "(root): {}", self.message)
        } else {
            write!(f, "{}: {}", self.pointer, self.message)
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An iterative routine stopped without meeting its tolerance. `best`
    /// carries the best iterate seen, when there is one.
    #[error("numeric failure: {message}")]
    NumericFailure {
        message: String,
        best: Option<Vec<f64>>,
    },

    /// The shifted sets intersect at the minimizer of the constructive
    /// procedure, so no separating dual vectors exist at that rung.
    #[error("extremality violated at rung {k}: residual distance {nu:e} is at the feasibility floor")]
    ExtremalityViolated { k: usize, nu: f64 },

    #[error("scenario schema violations:\n{}", format_issues(.0))]
    Schema(Vec<SchemaIssue>),

    #[error("io error at {path}: {message}")]
    Io { path: String, message: String },
}

fn format_issues(issues: &[SchemaIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  - {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>, best: Option<Vec<f64>>) -> Self {
        Error::NumericFailure {
            message: msg.into(),
            best,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
