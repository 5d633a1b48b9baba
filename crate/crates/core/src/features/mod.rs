//! Baseline and actor-enriched feature engineering, target construction and
//! forecast reconstruction.

mod matrix;
pub mod peaks;
pub mod target;
pub mod transforms;

pub use matrix::{
    build_feature_matrix, feature_columns, feature_names, FeatureMatrix, FeatureOptions, FeatureSet, PeakMode,
    MIN_PANEL_LEN,
};
pub use peaks::{detect_peaks, detect_peaks_causal, find_peaks, PeakOptions};
pub use target::{make_target, reconstruct, Reconstruction, TargetSeries};
pub use transforms::{lag, rolling_stat, zscore7, RollingStat};
