use thiserror::Error;

/// Errors raised anywhere in the model-updating pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A physical or statistical input lies outside its admissible domain.
    #[error("domain error: {name} = {value} ({reason})")]
    Domain {
        name: String,
        value: f64,
        reason: &'static str,
    },

    /// Dimensions of two inputs do not agree, or an index is out of range.
    #[error("size error: {0}")]
    Size(String),

    /// A factorization or eigen-solution could not be carried out reliably.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The sampler or optimizer could not make progress.
    #[error("diagnostic: {0}")]
    Diagnostic(String),

    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("parse error in {path} at line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    /// An error raised inside one stage of a run.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(name: impl Into<String>, value: f64, reason: &'static str) -> Self {
        Error::Domain {
            name: name.into(),
            value,
            reason,
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

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

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(name, value, "must be strictly positive and finite"))
    }
}
