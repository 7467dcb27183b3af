use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::crime_sim::TripRecord;
use crate::error::{Error, Result};
use crate::street_graph::{NodeFeatures, NODE_FEATURE_COUNT};

pub const TRIP_FEATURE_COUNT: usize = 2 * NODE_FEATURE_COUNT;

/// Origin features followed by destination features.
pub fn trip_feature_vector(trip: &TripRecord, nodes: &[NodeFeatures]) -> Vec<f64> {
    let mut v = Vec::with_capacity(TRIP_FEATURE_COUNT);
    v.extend_from_slice(&nodes[trip.origin].to_array());
    v.extend_from_slice(&nodes[trip.destination].to_array());
    v
}

pub fn trip_label(trip: &TripRecord) -> bool {
    trip.label.is_occurrence()
}

/// Row-major labeled samples.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<bool>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidArgument(format!("{} rows but {} labels", rows.len(), labels.len())));
        }
        if let Some(first) = rows.first() {
            if let Some(i) = rows.iter().position(|r| r.len() != first.len()) {
                return Err(Error::InvalidArgument(format!("row {i} has {} features, expected {}", rows[i].len(), first.len())));
            }
        }
        Ok(Dataset { rows, labels })
    }

    pub fn from_trips(trips: &[TripRecord], nodes: &[NodeFeatures]) -> Self {
        Dataset {
            rows: trips.iter().map(|t| trip_feature_vector(t, nodes)).collect(),
            labels: trips.iter().map(trip_label).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Indices of a class-balanced subsample: the minority class whole, the
/// majority class drawn without replacement down to the same size, then
/// shuffled.
pub fn undersample_indices(labels: &[bool], seed: u64) -> Result<Vec<usize>> {
    let (pos, neg): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| labels[i]);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (minority, mut majority) = if pos.len() <= neg.len() { (pos, neg) } else { (neg, pos) };
    let (chosen, _) = majority.partial_shuffle(&mut rng, minority.len());
    let mut out: Vec<usize> = minority.iter().chain(chosen.iter()).copied().collect();
    out.shuffle(&mut rng);
    Ok(out)
}

pub fn undersample(data: &Dataset, seed: u64) -> Result<Dataset> {
    Ok(data.subset(&undersample_indices(&data.labels, seed)?))
}

/// Per-class shuffled split; returns `(train, test)` indices with
/// `test_fraction` of each class (rounded) held out.
pub fn stratified_split(labels: &[bool], test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n_test = (idx.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(pos: usize, neg: usize) -> Vec<bool> {
        let mut v = vec![true; pos];
        v.extend(vec![false; neg]);
        v
    }

    #[test]
    fn balances_to_minority_size() {
        let y = labels(10, 900);
        let idx = undersample_indices(&y, 1).unwrap();
        assert_eq!(idx.len(), 20);
        assert_eq!(idx.iter().filter(|&&i| y[i]).count(), 10);
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 20);
        // every positive kept
        assert!((0..10).all(|i| idx.contains(&i)));
    }

    #[test]
    fn balanced_input_keeps_sizes() {
        let y = labels(25, 25);
        assert_eq!(undersample_indices(&y, 3).unwrap().len(), 50);
    }

    #[test]
    fn deterministic_under_seed() {
        let y = labels(13, 400);
        assert_eq!(undersample_indices(&y, 9).unwrap(), undersample_indices(&y, 9).unwrap());
        assert_ne!(undersample_indices(&y, 9).unwrap(), undersample_indices(&y, 10).unwrap());
    }

    #[test]
    fn single_class_is_an_error() {
        assert!(matches!(undersample_indices(&[true; 5], 0), Err(Error::SingleClass)));
        assert!(matches!(undersample_indices(&[], 0), Err(Error::SingleClass)));
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let y = labels(50, 450);
        let (train, test) = stratified_split(&y, 0.2, 4);
        assert_eq!(test.len(), 100);
        assert_eq!(test.iter().filter(|&&i| y[i]).count(), 10);
        assert_eq!(train.len() + test.len(), 500);
        assert!(train.iter().all(|i| test.binary_search(i).is_err()));
    }
}
