//! Scene ingestion, experiment verbs, reports and figures for the `adf`
//! command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod report;
pub mod scene;
pub mod svg;

pub use commands::{run_command, Options, Verb};
pub use report::RunReport;
pub use scene::{parse_scene, parse_scene_with, Setup};
pub use svg::{render_svg, Figure, Overlay};

#[derive(Debug)]
pub enum CliError {
    /// Malformed document; the message carries line and column.
    Parse(String),
    /// Well-formed document with an invalid value at `path`.
    Validation { path: String, message: String },
    Core(adf_core::Error),
    Io(std::io::Error),
    Output(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "scene parse error: {m}"),
            CliError::Validation { path, message } => write!(f, "invalid scene at {path}: {message}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Output(m) => write!(f, "output error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<adf_core::Error> for CliError {
    fn from(e: adf_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
