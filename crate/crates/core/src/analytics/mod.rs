//! Legend analytics: the feature correlation matrix reduced to thematic
//! layer blocks, and absolute Shapley attributions of the trip classifier.

mod correlation;
mod shapley;

pub use correlation::{pearson_matrix, reduce_by_layer, correlation_report, CorrelationMatrix, CorrelationReport, ReducedMatrix};
pub use shapley::{background_means, shapley, shapley_report, ShapleyMethod, ShapleyReport, MAX_EXACT_FEATURES};

use crate::prediction::TRIP_FEATURE_COUNT;
use crate::street_graph::{ThematicLayer, FEATURE_NAMES, NODE_FEATURE_COUNT};

/// Names of the 52 trip features: `origin.*` then `destination.*`.
pub fn trip_feature_names() -> Vec<String> {
    ["origin", "destination"]
        .iter()
        .flat_map(|side| FEATURE_NAMES.iter().map(move |f| format!("{side}.{f}")))
        .collect()
}

/// Thematic layer index of each of the 52 trip features.
pub fn trip_feature_layers() -> Vec<usize> {
    (0..TRIP_FEATURE_COUNT)
        .map(|i| ThematicLayer::of_node_feature(i % NODE_FEATURE_COUNT).index())
        .collect()
}

pub fn layer_labels() -> Vec<String> {
    ThematicLayer::ALL.iter().map(|l| l.label().to_owned()).collect()
}
