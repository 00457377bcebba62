//! Experiment drivers around `etdms-core`: configuration, convergence
//! studies, coarsening runs, the adaptive-vs-uniform comparison, and the
//! CSV / snapshot writers with provenance headers.

pub mod config;
pub mod experiments;
pub mod fit;
pub mod io;
pub mod provenance;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error on {0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] etdms_core::Error),
    /// The run produced a non-finite state after `t`; the last finite state is in `snapshot` if one was written.
    #[error("state diverged after t = {t}{}", .snapshot.as_ref().map(|p| format!("; last good state in {}", p.display())).unwrap_or_default())]
    Diverged { t: f64, snapshot: Option<PathBuf> },
}

pub type Result<T> = std::result::Result<T, Error>;
