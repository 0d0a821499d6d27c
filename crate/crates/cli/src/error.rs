use std::fmt;
use std::path::Path;

use aif_core::analytics::AnalyticsError;
use aif_core::corpus::CorpusError;
use aif_core::encoder::EncoderError;
use aif_core::expansion::ExpansionError;
use aif_core::index::IndexError;
use serde::Serialize;

/// One input problem, located as precisely as the check allows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub file: String,
    pub row: Option<usize>,
    pub column: Option<String>,
    pub message: String,
}

impl Diagnostic {
    pub fn new(file: &Path, row: Option<usize>, column: Option<&str>, message: impl Into<String>) -> Self {
        Diagnostic {
            file: file.display().to_string(),
            row,
            column: column.map(str::to_string),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.file)?;
        if let Some(row) = self.row {
            write!(f, ":row {row}")?;
        }
        if let Some(col) = &self.column {
            write!(f, ":column {col}")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("stage {stage} has not produced {artifact}; run `aif {stage}` first")]
    Dependency { stage: &'static str, artifact: String },
    #[error("{} input problem(s):\n{}", .0.len(), .0.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    Schema(Vec<Diagnostic>),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Dependency { .. } => 2,
            CliError::Schema(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn schema(file: &Path, row: Option<usize>, message: impl Into<String>) -> Self {
        CliError::Schema(vec![Diagnostic::new(file, row, None, message)])
    }

    pub fn from_corpus(file: &Path, e: CorpusError) -> Self {
        match e {
            CorpusError::Io(e) => CliError::Io(format!("{}: {e}", file.display())),
            CorpusError::Parse { line, message } => CliError::schema(file, Some(line), message),
            other => CliError::schema(file, None, other.to_string()),
        }
    }

    pub fn from_index(file: &Path, e: IndexError) -> Self {
        match e {
            IndexError::Io(e) => CliError::Io(format!("{}: {e}", file.display())),
            IndexError::Csv { row, message } => CliError::schema(file, Some(row), message),
            other => CliError::schema(file, None, other.to_string()),
        }
    }

    pub fn from_analytics(file: &Path, e: AnalyticsError) -> Self {
        match e {
            AnalyticsError::Io(e) => CliError::Io(format!("{}: {e}", file.display())),
            AnalyticsError::Csv { row, message } => CliError::schema(file, Some(row), message),
            AnalyticsError::Index(e) => CliError::from_index(file, e),
            AnalyticsError::Alignment(m) => CliError::schema(file, None, m),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<EncoderError> for CliError {
    fn from(e: EncoderError) -> Self {
        match e {
            EncoderError::NonFiniteLoss { .. } => CliError::Numeric(e.to_string()),
            EncoderError::Io(m) => CliError::Io(m),
            other => CliError::Schema(vec![Diagnostic {
                file: "<encoder>".into(),
                row: None,
                column: None,
                message: other.to_string(),
            }]),
        }
    }
}

impl From<ExpansionError> for CliError {
    fn from(e: ExpansionError) -> Self {
        match e {
            ExpansionError::DegenerateEmbedding | ExpansionError::DimensionMismatch(..) => CliError::Numeric(e.to_string()),
            other => CliError::Schema(vec![Diagnostic {
                file: "<expansion>".into(),
                row: None,
                column: None,
                message: other.to_string(),
            }]),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
