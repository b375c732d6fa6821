//! End-to-end study: training curves, equalization, control-set evaluation
//! and report files.

mod config;
mod pipeline;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{
    parse_config, validate_config, ConfigError, EvaluationSet, PipelineConfig, RawConfig, Violation,
};
pub use pipeline::*;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] crate::Error),

    #[error("{0}")]
    Usage(String),
}
