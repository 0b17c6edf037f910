//! File formats, parallel synthesis and the command-line front end for
//! [`sqlsynth_core`].

use std::path::PathBuf;

pub mod cli;
pub mod io;
pub mod pipeline;
pub mod report;

pub use sqlsynth_core as core;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("IoError: {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("FormatError: {}: {}{message}", path.display(), row.map(|r| format!("row {r}: ")).unwrap_or_default())]
    Format { path: PathBuf, row: Option<usize>, message: String },
    #[error("SchemaError: {}: line {line}: {message}", path.display())]
    Schema { path: PathBuf, line: usize, message: String },
    #[error("{source} ({})", path.display())]
    Template { path: PathBuf, source: sqlsynth_core::template::TemplateError },
    #[error(transparent)]
    Sql(#[from] sqlsynth_core::sql::SqlError),
    #[error(transparent)]
    Exec(#[from] sqlsynth_core::exec::ExecError),
    #[error(transparent)]
    Linearize(#[from] sqlsynth_core::linearize::LinearizeError),
    #[error(transparent)]
    Synth(#[from] sqlsynth_core::synth::SynthError),
    #[error(transparent)]
    Eval(#[from] sqlsynth_core::eval::EvalError),
}

impl Error {
    /// Error name as printed on the CLI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "IoError",
            Error::Format { .. } => "FormatError",
            Error::Schema { .. } => "SchemaError",
            Error::Template { source, .. } => source.kind(),
            Error::Sql(e) => e.kind(),
            Error::Exec(e) => e.kind(),
            Error::Linearize(e) => e.kind(),
            Error::Synth(e) => e.kind(),
            Error::Eval(e) => e.kind(),
        }
    }
}
