//! Semantic-change-aware axes in contextual embedding spaces.
//!
//! The crate fits identity, PCA and FastICA transforms over an embedding
//! matrix, sorts the resulting axes (explained-variance ratio for PCA,
//! sign-normalized skewness for ICA) and evaluates how well the leading axes
//! carry semantic change:
//!
//! - [`contextual`]: pairs of occurrences (WiC-style), distance-threshold
//!   ROC/AUC and difference heatmaps;
//! - [`temporal`]: occurrence sets from two periods, average pairwise
//!   distance change scores, ROC/AUC against binary golds and Spearman's rho
//!   against graded golds, including cumulative axis sweeps.
//!
//! [`embedstore`] defines the on-disk formats and [`synthkit`] provides
//! planted-axis fixtures plus independent oracles.

pub mod contextual;
pub mod embedstore;
pub mod error;
pub mod metrics;
pub mod rng;
pub mod synthkit;
pub mod temporal;
pub mod transforms;

pub use contextual::{diff_matrix, wic_distances, wic_roc, DiffMatrix, PairDistance};
pub use embedstore::{
    load_pairs, load_store, load_temporal, save_pairs, save_store, save_temporal, EmbeddingStore,
    PairDataset, PairInstance, TemporalDataset, TemporalTarget,
};
pub use error::{Error, Result};
pub use metrics::{auc_mannwhitney, roc_from_scores, spearman_rho, RocPoint, RocResult, Scored};
pub use temporal::{
    change_score, change_scores, spearman_sweep, temporal_roc, ChangeScoreTable, MetricKind,
    SweepResult,
};
pub use transforms::{
    fit_ica, fit_pca, fit_raw, skewness, AxisTransform, IcaConfig, TransformKind,
};
