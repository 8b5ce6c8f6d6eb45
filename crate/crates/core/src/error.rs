use std::path::PathBuf;

use thiserror::Error;

use crate::lexicon::Axis;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty lexicon")]
    EmptyLexicon,

    #[error("ablation fraction {0} outside [0, 1)")]
    InvalidFraction(f64),

    #[error("unknown {axis:?} label `{label}`")]
    UnknownLabel { axis: Axis, label: String },

    #[error("{axis:?} vector has {found} elements, expected {expected}")]
    AxisLength {
        axis: Axis,
        expected: usize,
        found: usize,
    },

    #[error("axis mismatch: expected {expected:?}, found {found:?}")]
    AxisMismatch { expected: Axis, found: Axis },

    #[error("value {value} at index {index} outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },

    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported weight file version `{0}`")]
    Version(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid n-gram order {0} (expected 1..=5)")]
    NgramOrder(usize),

    #[error("empty test set")]
    EmptyTestSet,

    #[error("empty annotation list")]
    EmptyAnnotations,

    #[error("word graph is empty")]
    EmptyGraph,

    #[error("no complete path through the word graph; longest partials: {}", format_partials(.longest))]
    NoCompletePath { longest: Vec<Vec<String>> },

    #[error("corpus validation failed: {0}")]
    Corpus(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("missing model file {0}")]
    MissingModel(PathBuf),

    #[error("{}: {source}", .path.display())]
    File { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_partials(partials: &[Vec<String>]) -> String {
    partials
        .iter()
        .map(|p| format!("[{}]", p.join(" ")))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub(crate) fn file(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Self + '_ {
        move |source| Error::File {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
