//! Shapley attributions with background-mean masking: features outside a
//! coalition take their background mean.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prediction::Scorer;

pub const MAX_EXACT_FEATURES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ShapleyMethod {
    /// Enumerates every coalition.
    Exact,
    /// Averages marginal contributions over random feature orderings.
    MonteCarlo { permutations: usize },
}

pub fn background_means(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = rows.first().ok_or(Error::EmptyDataset)?;
    let n = rows.len() as f64;
    Ok((0..first.len()).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect())
}

/// Per-feature attribution of `model.score(x)` against the background.
/// The attributions sum to `score(x) - score(background)`.
pub fn shapley(model: &impl Scorer, x: &[f64], background: &[f64], method: ShapleyMethod, seed: u64) -> Result<Vec<f64>> {
    let n = model.n_features();
    if x.len() != n || background.len() != n {
        return Err(Error::InvalidArgument(format!(
            "model takes {n} features, got x of {} and background of {}",
            x.len(),
            background.len()
        )));
    }
    match method {
        ShapleyMethod::Exact => exact(model, x, background),
        ShapleyMethod::MonteCarlo { permutations } => {
            if permutations == 0 {
                return Err(Error::InvalidArgument("permutations must be positive".into()));
            }
            Ok(monte_carlo(model, x, background, permutations, seed))
        }
    }
}

fn exact(model: &impl Scorer, x: &[f64], background: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n > MAX_EXACT_FEATURES {
        return Err(Error::ExactShapleyTooLarge {
            got: n,
            max: MAX_EXACT_FEATURES,
        });
    }
    let mut z = background.to_vec();
    let values: Vec<f64> = (0..1usize << n)
        .map(|mask| {
            for i in 0..n {
                z[i] = if mask >> i & 1 == 1 { x[i] } else { background[i] };
            }
            model.score(&z)
        })
        .collect();
    // |S|! (n - |S| - 1)! / n!
    let fact: Vec<f64> = (0..=n).scan(1.0, |acc, k| {
        if k > 0 {
            *acc *= k as f64;
        }
        Some(*acc)
    }).collect();
    let weight: Vec<f64> = (0..n).map(|s| fact[s] * fact[n - s - 1] / fact[n]).collect();
    let mut phi = vec![0.0; n];
    for (i, p) in phi.iter_mut().enumerate() {
        for mask in 0..1usize << n {
            if mask >> i & 1 == 0 {
                let s = mask.count_ones() as usize;
                *p += weight[s] * (values[mask | 1 << i] - values[mask]);
            }
        }
    }
    Ok(phi)
}

fn monte_carlo(model: &impl Scorer, x: &[f64], background: &[f64], permutations: usize, seed: u64) -> Vec<f64> {
    let n = x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut phi = vec![0.0; n];
    let base = model.score(background);
    let mut z = background.to_vec();
    for _ in 0..permutations {
        order.shuffle(&mut rng);
        z.copy_from_slice(background);
        let mut prev = base;
        for &i in &order {
            z[i] = x[i];
            let cur = model.score(&z);
            phi[i] += cur - prev;
            prev = cur;
        }
    }
    phi.iter_mut().for_each(|p| *p /= permutations as f64);
    phi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyReport {
    pub features: Vec<String>,
    /// Mean absolute attribution per feature.
    pub mean_abs: Vec<f64>,
    /// `mean_abs` as a percentage of its total.
    pub percent: Vec<f64>,
    pub layer_labels: Vec<String>,
    pub layer_sums: Vec<f64>,
    pub layer_percent: Vec<f64>,
    pub sample_size: usize,
    pub method: ShapleyMethod,
    pub seed: u64,
}

fn percentages(v: &[f64]) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.iter().map(|x| if total > 0.0 { 100.0 * x / total } else { 0.0 }).collect()
}

/// Mean absolute Shapley values over `samples`, summed per thematic layer.
/// Samples run in parallel; sample `i` uses seed `seed + i`.
#[allow(clippy::too_many_arguments)]
pub fn shapley_report<M: Scorer + Sync>(
    model: &M,
    samples: &[Vec<f64>],
    background: &[f64],
    features: &[String],
    assignment: &[usize],
    layer_labels: &[String],
    method: ShapleyMethod,
    seed: u64,
) -> Result<ShapleyReport> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = model.n_features();
    if features.len() != n || assignment.len() != n {
        return Err(Error::InvalidArgument("feature names and layer assignment must cover every feature".into()));
    }
    let per_sample: Vec<Vec<f64>> = samples
        .par_iter()
        .enumerate()
        .map(|(i, x)| shapley(model, x, background, method, seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;
    let mut mean_abs = vec![0.0; n];
    for phi in &per_sample {
        for (m, p) in mean_abs.iter_mut().zip(phi) {
            *m += p.abs();
        }
    }
    mean_abs.iter_mut().for_each(|m| *m /= samples.len() as f64);
    let mut layer_sums = vec![0.0; layer_labels.len()];
    for (f, &l) in assignment.iter().enumerate() {
        layer_sums[l] += mean_abs[f];
    }
    Ok(ShapleyReport {
        features: features.to_vec(),
        percent: percentages(&mean_abs),
        mean_abs,
        layer_labels: layer_labels.to_vec(),
        layer_percent: percentages(&layer_sums),
        layer_sums,
        sample_size: samples.len(),
        method,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prediction::FnScorer;

    #[test]
    fn linear_model_has_closed_form() {
        let w = [2.0, -1.0, 0.5, 3.0];
        let f = FnScorer::new(4, |x: &[f64]| x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + 7.0);
        let x = [1.0, 2.0, -3.0, 0.25];
        let bg = [0.5, 0.0, 1.0, 1.0];
        let phi = shapley(&f, &x, &bg, ShapleyMethod::Exact, 0).unwrap();
        for i in 0..4 {
            assert!((phi[i] - w[i] * (x[i] - bg[i])).abs() < 1e-12);
        }
        let mc = shapley(&f, &x, &bg, ShapleyMethod::MonteCarlo { permutations: 3 }, 1).unwrap();
        for i in 0..4 {
            assert!((mc[i] - phi[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn interaction_is_split_evenly() {
        let f = FnScorer::new(2, |x: &[f64]| x[0] * x[1]);
        let phi = shapley(&f, &[1.0, 1.0], &[0.0, 0.0], ShapleyMethod::Exact, 0).unwrap();
        assert_eq!(phi, vec![0.5, 0.5]);
    }

    #[test]
    fn efficiency_and_too_large() {
        let f = FnScorer::new(5, |x: &[f64]| (x[0] * x[3]).sin() + x[1].max(x[2]) * x[4]);
        let x = [0.3, 1.2, -0.4, 2.0, 0.7];
        let bg = [0.0; 5];
        let phi = shapley(&f, &x, &bg, ShapleyMethod::Exact, 0).unwrap();
        let gap = f.score(&x) - f.score(&bg);
        assert!((phi.iter().sum::<f64>() - gap).abs() < 1e-12);
        let big = FnScorer::new(13, |_: &[f64]| 0.0);
        assert!(matches!(
            shapley(&big, &[0.0; 13], &[0.0; 13], ShapleyMethod::Exact, 0),
            Err(Error::ExactShapleyTooLarge { got: 13, max: 12 })
        ));
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let f = FnScorer::new(3, |x: &[f64]| x[0] * x[1] + x[2] * x[2]);
        let x = [1.0, 2.0, 3.0];
        let m = ShapleyMethod::MonteCarlo { permutations: 10 };
        let a = shapley(&f, &x, &[0.0; 3], m, 42).unwrap();
        assert_eq!(a, shapley(&f, &x, &[0.0; 3], m, 42).unwrap());
        assert!((a.iter().sum::<f64>() - 11.0).abs() < 1e-12);
    }

    #[test]
    fn report_sums_layers() {
        let f = FnScorer::new(3, |x: &[f64]| x[0] + 2.0 * x[1] - x[2]);
        let samples = vec![vec![1.0, 1.0, 1.0], vec![-1.0, -1.0, -1.0]];
        let names: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        let labels: Vec<String> = ["L0", "L1"].map(String::from).to_vec();
        let r = shapley_report(&f, &samples, &[0.0; 3], &names, &[0, 1, 0], &labels, ShapleyMethod::Exact, 0).unwrap();
        assert_eq!(r.mean_abs, vec![1.0, 2.0, 1.0]);
        assert_eq!(r.layer_sums, vec![2.0, 2.0]);
        assert_eq!(r.layer_percent, vec![50.0, 50.0]);
        assert!((r.percent.iter().sum::<f64>() - 100.0).abs() < 1e-12);
    }
}
