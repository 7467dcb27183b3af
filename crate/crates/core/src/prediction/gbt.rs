//! Gradient-boosted regression trees for binary classification.
//!
//! Second-order boosting on the logistic loss with exact greedy splits:
//! every distinct value of every feature is a split candidate, gain is
//! `G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)` halved, leaf weight is
//! `-G/(H+l)` scaled by the learning rate.

use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, Scorer};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Minimum loss reduction for a split.
    pub gamma: f64,
    /// Minimum hessian sum per child.
    pub min_child_weight: f64,
    /// Fraction of rows drawn (without replacement) for each tree.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            rounds: 100,
            max_depth: 4,
            learning_rate: 0.1,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1e-3,
            subsample: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    /// Rows with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] < *threshold { *left } else { *right },
                TreeNode::Leaf { value } => return *value,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, at: usize) -> usize {
            match &t.nodes[at] {
                TreeNode::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
                TreeNode::Leaf { .. } => 0,
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub format_version: u32,
    pub n_features: usize,
    pub base_margin: f64,
    pub params: GbtParams,
    pub trees: Vec<Tree>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl GbtModel {
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.trees.iter().fold(self.base_margin, |acc, t| acc + t.predict(x))
    }

    /// Probability of the positive class.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }

    /// Positive when the probability is at least 0.5.
    pub fn predict(&self, x: &[f64]) -> bool {
        self.margin(x) >= 0.0
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: GbtModel = serde_json::from_str(s)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Corrupt(format!(
                "model format version {} (expected {MODEL_FORMAT_VERSION})",
                m.format_version
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        GbtModel::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

impl Scorer for GbtModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn score(&self, x: &[f64]) -> f64 {
        self.predict_proba(x)
    }
}

struct Builder<'a> {
    data: &'a Dataset,
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a GbtParams,
    nodes: Vec<TreeNode>,
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl Builder<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.lambda)
    }

    fn leaf_value(&self, g: f64, h: f64) -> f64 {
        -g / (h + self.params.lambda) * self.params.learning_rate
    }

    fn find_split(&self, rows: &[usize], g_sum: f64, h_sum: f64) -> Option<BestSplit> {
        let parent = self.score(g_sum, h_sum);
        let mut best: Option<BestSplit> = None;
        let mut order = rows.to_vec();
        for f in 0..self.data.n_features() {
            order.sort_by(|&a, &b| self.data.rows[a][f].total_cmp(&self.data.rows[b][f]).then(a.cmp(&b)));
            let (mut gl, mut hl) = (0.0, 0.0);
            for w in 0..order.len() - 1 {
                let i = order[w];
                gl += self.grad[i];
                hl += self.hess[i];
                let (lo, hi) = (self.data.rows[i][f], self.data.rows[order[w + 1]][f]);
                if lo == hi {
                    continue;
                }
                let (gr, hr) = (g_sum - gl, h_sum - hl);
                if hl < self.params.min_child_weight || hr < self.params.min_child_weight {
                    continue;
                }
                let gain = 0.5 * (self.score(gl, hl) + self.score(gr, hr) - parent) - self.params.gamma;
                if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mid = lo + (hi - lo) / 2.0;
                    best = Some(BestSplit {
                        gain,
                        feature: f,
                        threshold: if mid > lo { mid } else { hi },
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        let g_sum: f64 = rows.iter().map(|&i| self.grad[i]).sum();
        let h_sum: f64 = rows.iter().map(|&i| self.hess[i]).sum();
        let id = self.nodes.len();
        let split = if depth < self.params.max_depth && rows.len() >= 2 {
            self.find_split(rows, g_sum, h_sum)
        } else {
            None
        };
        let Some(split) = split else {
            self.nodes.push(TreeNode::Leaf {
                value: self.leaf_value(g_sum, h_sum),
            });
            return id;
        };
        self.nodes.push(TreeNode::Leaf { value: 0.0 });
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| self.data.rows[i][split.feature] < split.threshold);
        let left = self.grow(&left_rows, depth + 1);
        let right = self.grow(&right_rows, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

/// Fits a boosted ensemble minimizing logistic loss.
pub fn train(data: &Dataset, params: &GbtParams) -> Result<GbtModel> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(params.learning_rate > 0.0) || params.lambda < 0.0 || !(params.subsample > 0.0 && params.subsample <= 1.0) {
        return Err(Error::InvalidArgument("learning_rate > 0, lambda >= 0 and subsample in (0, 1] are required".into()));
    }
    let n = data.len();
    let prior = (data.positives() as f64 / n as f64).clamp(1e-6, 1.0 - 1e-6);
    let base_margin = (prior / (1.0 - prior)).ln();
    let mut margin = vec![base_margin; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let per_tree = ((n as f64 * params.subsample).round() as usize).clamp(1, n);
    let mut trees = Vec::with_capacity(params.rounds);

    for _ in 0..params.rounds {
        for i in 0..n {
            let p = sigmoid(margin[i]);
            grad[i] = p - f64::from(u8::from(data.labels[i]));
            hess[i] = (p * (1.0 - p)).max(1e-16);
        }
        let rows: Vec<usize> = if per_tree == n {
            (0..n).collect()
        } else {
            let mut r = index::sample(&mut rng, n, per_tree).into_vec();
            r.sort_unstable();
            r
        };
        let mut builder = Builder {
            data,
            grad: &grad,
            hess: &hess,
            params,
            nodes: Vec::new(),
        };
        builder.grow(&rows, 0);
        let tree = Tree { nodes: builder.nodes };
        for (m, row) in margin.iter_mut().zip(&data.rows) {
            *m += tree.predict(row);
        }
        trees.push(tree);
    }
    Ok(GbtModel {
        format_version: MODEL_FORMAT_VERSION,
        n_features: data.n_features(),
        base_margin,
        params: params.clone(),
        trees,
    })
}
