use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub values: Vec<Vec<f64>>,
    /// Features with zero variance; they correlate 0 with every other
    /// feature and 1 with themselves.
    pub zero_variance: Vec<usize>,
}

/// Pearson correlation between every pair of columns of `rows`.
pub fn pearson_matrix(rows: &[Vec<f64>]) -> Result<CorrelationMatrix> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("correlation needs at least 2 rows, got {n}")));
    }
    let d = rows[0].len();
    if let Some(i) = rows.iter().position(|r| r.len() != d) {
        return Err(Error::InvalidArgument(format!("row {i} has {} columns, expected {d}", rows[i].len())));
    }
    let means: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let centered: Vec<Vec<f64>> = (0..d)
        .map(|j| rows.iter().map(|r| r[j] - means[j]).collect())
        .collect();
    let norms: Vec<f64> = centered.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let zero_variance: Vec<usize> = (0..d).filter(|&j| norms[j] == 0.0).collect();

    let mut values = vec![vec![0.0; d]; d];
    for a in 0..d {
        values[a][a] = 1.0;
        for b in a + 1..d {
            let r = if norms[a] == 0.0 || norms[b] == 0.0 {
                0.0
            } else {
                let dot: f64 = centered[a].iter().zip(&centered[b]).map(|(x, y)| x * y).sum();
                (dot / (norms[a] * norms[b])).clamp(-1.0, 1.0)
            };
            values[a][b] = r;
            values[b][a] = r;
        }
    }
    Ok(CorrelationMatrix { values, zero_variance })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedMatrix {
    pub values: Vec<Vec<f64>>,
    /// Layers with a single feature; their diagonal is 1 by convention.
    pub singleton_layers: Vec<usize>,
    /// Layers with no features; their rows and columns are 0.
    pub empty_layers: Vec<usize>,
}

/// Block means of `full` over the feature-to-layer `assignment`. Diagonal
/// blocks average the distinct pairs inside the layer (the unit diagonal is
/// left out).
pub fn reduce_by_layer(full: &[Vec<f64>], assignment: &[usize], n_layers: usize) -> Result<ReducedMatrix> {
    if assignment.len() != full.len() {
        return Err(Error::InvalidArgument(format!(
            "assignment covers {} features, matrix has {}",
            assignment.len(),
            full.len()
        )));
    }
    if let Some(&bad) = assignment.iter().find(|&&l| l >= n_layers) {
        return Err(Error::InvalidArgument(format!("layer index {bad} out of range")));
    }
    let members: Vec<Vec<usize>> = (0..n_layers)
        .map(|l| (0..assignment.len()).filter(|&f| assignment[f] == l).collect())
        .collect();
    let mut values = vec![vec![0.0; n_layers]; n_layers];
    let mut singleton_layers = Vec::new();
    let mut empty_layers = Vec::new();
    for i in 0..n_layers {
        if members[i].is_empty() {
            empty_layers.push(i);
            continue;
        }
        for j in i..n_layers {
            if members[j].is_empty() {
                continue;
            }
            let (mut sum, mut count) = (0.0, 0usize);
            if i == j {
                let m = &members[i];
                for (k, &a) in m.iter().enumerate() {
                    for &b in &m[k + 1..] {
                        sum += full[a][b];
                        count += 1;
                    }
                }
            } else {
                for &a in &members[i] {
                    for &b in &members[j] {
                        sum += full[a][b];
                        count += 1;
                    }
                }
            }
            let v = if count == 0 {
                singleton_layers.push(i);
                1.0
            } else {
                sum / count as f64
            };
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    Ok(ReducedMatrix {
        values,
        singleton_layers,
        empty_layers,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub features: Vec<String>,
    pub full: Vec<Vec<f64>>,
    pub zero_variance_features: Vec<String>,
    pub layer_labels: Vec<String>,
    /// Layer label of each feature.
    pub assignment: Vec<String>,
    pub reduced: Vec<Vec<f64>>,
    pub singleton_layers: Vec<String>,
    pub empty_layers: Vec<String>,
    pub sample_size: usize,
}

pub fn correlation_report(rows: &[Vec<f64>], features: &[String], assignment: &[usize], layer_labels: &[String]) -> Result<CorrelationReport> {
    let full = pearson_matrix(rows)?;
    let reduced = reduce_by_layer(&full.values, assignment, layer_labels.len())?;
    let label = |i: &usize| layer_labels[*i].clone();
    Ok(CorrelationReport {
        features: features.to_vec(),
        zero_variance_features: full.zero_variance.iter().map(|&i| features[i].clone()).collect(),
        full: full.values,
        layer_labels: layer_labels.to_vec(),
        assignment: assignment.iter().map(label).collect(),
        reduced: reduced.values,
        singleton_layers: reduced.singleton_layers.iter().map(label).collect(),
        empty_layers: reduced.empty_layers.iter().map(label).collect(),
        sample_size: rows.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Textbook two-pass Pearson.
    fn oracle(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        sxy / (sxx * syy).sqrt()
    }

    #[test]
    fn affine_relations() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| {
            let x = i as f64 * 1.5 - 2.0;
            vec![x, 2.0 * x + 1.0, -x]
        }).collect();
        let m = pearson_matrix(&rows).unwrap();
        assert_eq!(m.values[0][0], 1.0);
        assert!((m.values[0][1] - 1.0).abs() < 1e-12);
        assert!((m.values[0][2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn five_row_fixture_matches_textbook() {
        let cols = [
            [1.0, 2.0, 4.0, 3.0, 7.0],
            [2.0, 1.0, 0.5, 5.0, 4.0],
            [10.0, 9.0, 7.5, 8.0, 3.0],
        ];
        let rows: Vec<Vec<f64>> = (0..5).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
        let m = pearson_matrix(&rows).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let expect = if a == b { 1.0 } else { oracle(&cols[a], &cols[b]) };
                assert!((m.values[a][b] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_variance_is_flagged() {
        let rows = vec![vec![1.0, 3.0], vec![2.0, 3.0], vec![5.0, 3.0]];
        let m = pearson_matrix(&rows).unwrap();
        assert_eq!(m.zero_variance, vec![1]);
        assert_eq!(m.values[0][1], 0.0);
        assert_eq!(m.values[1][1], 1.0);
        assert!(pearson_matrix(&rows[..1]).is_err());
    }

    #[test]
    fn block_means() {
        // layers {0,1} and {2,3}; cross block [[.2,.4],[.6,.8]]
        let full = vec![
            vec![1.0, 0.3, 0.2, 0.4],
            vec![0.3, 1.0, 0.6, 0.8],
            vec![0.2, 0.6, 1.0, -0.1],
            vec![0.4, 0.8, -0.1, 1.0],
        ];
        let r = reduce_by_layer(&full, &[0, 0, 1, 1], 2).unwrap();
        assert!((r.values[0][1] - 0.5).abs() < 1e-15);
        assert_eq!(r.values[1][0], r.values[0][1]);
        assert_eq!(r.values[0][0], 0.3);
        assert_eq!(r.values[1][1], -0.1);
    }

    #[test]
    fn singleton_and_identical_layers() {
        let full = vec![vec![1.0; 3]; 3];
        let r = reduce_by_layer(&full, &[0, 1, 1], 2).unwrap();
        assert_eq!(r.values, vec![vec![1.0; 2]; 2]);
        assert_eq!(r.singleton_layers, vec![0]);
        let e = reduce_by_layer(&full, &[0, 0, 0], 3).unwrap();
        assert_eq!(e.empty_layers, vec![1, 2]);
        assert!(reduce_by_layer(&full, &[0, 0], 1).is_err());
    }
}
