#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use urbanlens::analytics::{pearson_matrix, reduce_by_layer, shapley, ShapleyMethod};
use urbanlens::prediction::{train, Dataset, FnScorer, GbtModel, GbtParams, Scorer};

fn random_model(n_features: usize, seed: u64) -> GbtModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..300).map(|_| (0..n_features).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let labels = rows.iter().map(|r| r[0] * r[1 % n_features] + r[n_features - 1] > 0.1).collect();
    let params = GbtParams { rounds: 25, max_depth: 3, ..Default::default() };
    train(&Dataset::new(rows, labels).unwrap(), &params).unwrap()
}

fn textbook_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn exact_shapley_is_efficient_on_trees() {
    for n in [2, 5, 8, 10] {
        let model = random_model(n, n as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let bg: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.2..0.2)).collect();
        for _ in 0..5 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let phi = shapley(&model, &x, &bg, ShapleyMethod::Exact, 0).unwrap();
            let gap = phi.iter().sum::<f64>() - (model.score(&x) - model.score(&bg));
            assert!(gap.abs() < 1e-9, "n = {n}, gap {gap}");
        }
    }
}

#[test]
fn monte_carlo_is_efficient_too() {
    let model = random_model(20, 5);
    let x = vec![0.7; 20];
    let bg = vec![0.0; 20];
    let phi = shapley(&model, &x, &bg, ShapleyMethod::MonteCarlo { permutations: 8 }, 3).unwrap();
    assert!((phi.iter().sum::<f64>() - (model.score(&x) - model.score(&bg))).abs() < 1e-9);
}

#[test]
fn duplicated_features_share_credit() {
    let f = FnScorer::new(4, |x: &[f64]| (x[0] * x[1]).sin() + 0.3 * x[2] * (x[0] + x[1]) + x[3]);
    let bg = [0.1, 0.1, -0.4, 0.0];
    for v in [0.5, 1.3, -2.0] {
        let x = [v, v, 0.8, 0.2];
        let phi = shapley(&f, &x, &bg, ShapleyMethod::Exact, 0).unwrap();
        assert!((phi[0] - phi[1]).abs() < 1e-12, "{phi:?}");
    }
    // a feature the model ignores gets nothing
    let g = FnScorer::new(3, |x: &[f64]| x[0].exp() + x[2]);
    let phi = shapley(&g, &[1.0, 9.0, 2.0], &[0.0, 0.0, 0.0], ShapleyMethod::Exact, 0).unwrap();
    assert_eq!(phi[1], 0.0);
}

#[test]
fn monte_carlo_converges_to_exact() {
    let model = random_model(3, 21);
    let bg = [0.0, 0.1, -0.1];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let exact = shapley(&model, &x, &bg, ShapleyMethod::Exact, 0).unwrap();
        let mc = shapley(&model, &x, &bg, ShapleyMethod::MonteCarlo { permutations: 2_000 }, 99).unwrap();
        for (e, m) in exact.iter().zip(&mc) {
            assert!((e - m).abs() < 0.05, "{exact:?} vs {mc:?}");
        }
    }
}

#[test]
fn block_constant_matrix_reduces_to_its_constants() {
    // layer sizes 3, 1, 4; within-block constant off-diagonal values
    let assignment = [0, 0, 0, 1, 2, 2, 2, 2];
    let c = [[0.4, -0.2, 0.7], [-0.2, 1.0, 0.1], [0.7, 0.1, -0.3]];
    let full: Vec<Vec<f64>> = (0..8)
        .map(|i| (0..8).map(|j| if i == j { 1.0 } else { c[assignment[i]][assignment[j]] }).collect())
        .collect();
    let r = reduce_by_layer(&full, &assignment, 3).unwrap();
    for a in 0..3 {
        for b in 0..3 {
            assert!((r.values[a][b] - c[a][b]).abs() < 1e-12, "({a}, {b})");
        }
    }
    assert_eq!(r.singleton_layers, vec![1]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pearson_is_bounded_and_matches_textbook(seed in any::<u64>(), n in 3usize..60, m in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
        let mat = pearson_matrix(&rows).unwrap().values;
        for i in 0..m {
            prop_assert_eq!(mat[i][i], 1.0);
            for j in 0..m {
                prop_assert!((-1.0..=1.0).contains(&mat[i][j]));
                prop_assert_eq!(mat[i][j], mat[j][i]);
                if i != j {
                    let a: Vec<f64> = rows.iter().map(|r| r[i]).collect();
                    let b: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                    prop_assert!((mat[i][j] - textbook_pearson(&a, &b)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn pearson_ignores_affine_rescaling(seed in any::<u64>(), scale in 0.1..50.0f64, shift in -100.0..100.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect();
        let moved: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0] * scale + shift, r[1]]).collect();
        let a = pearson_matrix(&rows).unwrap().values[0][1];
        let b = pearson_matrix(&moved).unwrap().values[0][1];
        prop_assert!((a - b).abs() < 1e-9);
    }
}
