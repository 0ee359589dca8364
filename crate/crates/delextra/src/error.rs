use std::io;

use thiserror::Error;

/// Errors produced by treebank I/O, training, transfer and experiment stages.
#[derive(Debug, Error)]
pub enum Error {
    /// A token line that cannot be parsed; reports the 1-based line number.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Head indices that do not form a tree; reports the 1-based sentence number.
    #[error("structure error in sentence {sentence}: {message}")]
    Structure { sentence: usize, message: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("feature template mismatch: expected {expected}, found {found}")]
    TemplateMismatch { expected: String, found: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error(
        "invalid style setup {input:?}: expected styles/style/style, e.g. \"P/P/P\" or \"P,S/S/P\""
    )]
    StyleSetup { input: String },

    #[error("invalid model file: {0}")]
    ModelFormat(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("experiment stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Wraps an error with the name of the experiment stage it aborted.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
