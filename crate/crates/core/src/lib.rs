//! Multi-scale time-series feature extraction and feature-based clustering
//! with unsupervised random forests.
//!
//! The pipeline is: aggregate a daily series to coarser resolutions
//! ([`series`]), compute the 23 features of each ([`features`]), then, per
//! `(series type, resolution)`, train a forest that separates real feature
//! rows from column-bootstrapped ones ([`forest`]) and cluster its
//! proximities with k-medoids ([`clustering`]).

pub mod clustering;
pub mod correlation;
pub mod decomposition;
pub mod dispersion;
pub mod error;
pub mod features;
pub mod forest;
mod linalg;
pub mod matrix;
pub mod series;
pub mod spectral;
pub mod stats;

pub use clustering::{pam, silhouette, sweep_k, ClusterResult, SweepResult};
pub use error::{Error, Result};
pub use features::{compute_features, FeatureMatrix, FeatureRow, FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
pub use forest::{gini_importance, make_contrast, proximity, train_forest, ContrastDataset, Forest, ForestConfig};
pub use series::{aggregate, default_resolutions, derive_resolutions, AggregationRule, ResolutionSpec, Statistic, TimeSeries};
