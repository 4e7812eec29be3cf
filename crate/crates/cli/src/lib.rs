//! Batch pipeline around the `hydrofeat` library: manifest ingestion, run
//! configuration, per-slice orchestration and CSV output.

pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod pipeline;

pub use config::RunConfig;
pub use error::{CliError, Result};
pub use manifest::{ingest, read_daily, DatasetManifest, ManifestEntry};
pub use pipeline::{analyze, extract_features, AnalysisStage, FeatureStage, SliceAnalysis, SliceFailure};
