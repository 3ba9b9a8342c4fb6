//! Change detection for week-indexed basket data using graph-based entropy.
//!
//! The pipeline for each week builds a PMI co-occurrence graph over a window
//! of baskets ([`graph`]), assigns baskets to connected-component clusters
//! and measures the entropy of that assignment ([`gbe`]). Drops in entropy
//! are change signals. [`rankchange`] derives reference labels from weekly
//! top-R rank shifts, [`eval`] scores alerts against them, and [`synth`]
//! generates seeded test data with planted transitions.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod gbe;
pub mod graph;
pub mod rankchange;
pub mod synth;

pub use dataset::{parse_baskets, Basket, InputFormat, ItemCatalog, WeeklyDataset};
pub use error::{Error, Result};
pub use eval::EvalReport;
pub use gbe::{detect, ChangeScoreSeries, DetectionParams};
pub use graph::{ClusterPartition, CooccurrenceGraph, EdgeScore, GraphFormat};
pub use rankchange::{rank_change_series, RankChangeSeries};
