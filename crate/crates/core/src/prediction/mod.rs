//! Crime-on-trip prediction: 52-feature trip vectors, random undersampling,
//! gradient-boosted trees with logistic loss, G-mean evaluation and the
//! success/failure grid.

mod dataset;
mod gbt;
mod grid;
mod metrics;

pub use dataset::{stratified_split, trip_feature_vector, trip_label, undersample, undersample_indices, Dataset, TRIP_FEATURE_COUNT};
pub use gbt::{train, GbtModel, GbtParams, Tree, TreeNode, MODEL_FORMAT_VERSION};
pub use grid::{prediction_grid, GridCell, PredictionGrid};
pub use metrics::{g_mean, Confusion};

/// Anything that maps a feature vector to a score. Attribution and grid
/// code are written against this.
pub trait Scorer {
    fn n_features(&self) -> usize;
    fn score(&self, x: &[f64]) -> f64;
}

/// Adapts a closure into a [`Scorer`].
pub struct FnScorer<F> {
    pub n_features: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64> FnScorer<F> {
    pub fn new(n_features: usize, f: F) -> Self {
        FnScorer { n_features, f }
    }
}

impl<F: Fn(&[f64]) -> f64> Scorer for FnScorer<F> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn score(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}
