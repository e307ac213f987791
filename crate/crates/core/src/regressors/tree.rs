//! CART regression trees: exhaustive variance-reduction splits over
//! (optionally subsampled) features, stored as a flat node arena.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FittedState, RegressorSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    pub value: f64,
    pub leaf: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<TreeNode>,
}

impl TreeModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            let node = &self.nodes[i];
            if node.leaf {
                return node.value;
            }
            i = if row[node.feature] <= node.threshold {
                node.left
            } else {
                node.right
            };
        }
    }
}

pub(super) struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features considered per split; None = all.
    pub features_per_split: Option<usize>,
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    cfg: &'a TreeConfig,
    rng: Option<ChaCha8Rng>,
    nodes: Vec<TreeNode>,
}

impl Grower<'_> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let value = idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64;
        self.nodes.push(TreeNode {
            feature: 0,
            threshold: 0.0,
            left: 0,
            right: 0,
            value,
            leaf: true,
        });
        self.nodes.len() - 1
    }

    fn grow(&mut self, idx: &mut Vec<usize>, depth: usize) -> usize {
        let n = idx.len();
        if depth >= self.cfg.max_depth || n < 2 * self.cfg.min_samples_leaf.max(1) || n < 2 {
            return self.leaf(idx);
        }

        let d = self.x[0].len();
        let mut features: Vec<usize> = (0..d).collect();
        if let (Some(m), Some(rng)) = (self.cfg.features_per_split, self.rng.as_mut()) {
            features.shuffle(rng);
            features.truncate(m.clamp(1, d));
            features.sort_unstable(); // scan order independent of the draw order
        }

        let total_sum: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let total_sq: f64 = idx.iter().map(|&i| self.y[i] * self.y[i]).sum();
        let parent_sse = total_sq - total_sum * total_sum / n as f64;
        if parent_sse <= 1e-12 {
            return self.leaf(idx);
        }

        let mut best: Option<(f64, usize, f64)> = None; // (sse, feature, threshold)
        let mut sorted = idx.clone();
        for &f in &features {
            sorted.sort_by(|&a, &b| {
                self.x[a][f]
                    .partial_cmp(&self.x[b][f])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let mut left_sum = 0.0;
            let mut left_sq = 0.0;
            for k in 1..n {
                let i = sorted[k - 1];
                left_sum += self.y[i];
                left_sq += self.y[i] * self.y[i];
                let (prev, next) = (self.x[sorted[k - 1]][f], self.x[sorted[k]][f]);
                if prev == next {
                    continue;
                }
                if k < self.cfg.min_samples_leaf || n - k < self.cfg.min_samples_leaf {
                    continue;
                }
                let right_sum = total_sum - left_sum;
                let right_sq = total_sq - left_sq;
                let sse = (left_sq - left_sum * left_sum / k as f64)
                    + (right_sq - right_sum * right_sum / (n - k) as f64);
                let threshold = 0.5 * (prev + next);
                if best.map_or(true, |(b, _, _)| sse < b) {
                    best = Some((sse, f, threshold));
                }
            }
        }

        let Some((_, feature, threshold)) = best else {
            return self.leaf(idx);
        };
        let (mut left_idx, mut right_idx): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.x[i][feature] <= threshold);

        let slot = self.nodes.len();
        self.nodes.push(TreeNode {
            feature,
            threshold,
            left: 0,
            right: 0,
            value: total_sum / n as f64,
            leaf: false,
        });
        let left = self.grow(&mut left_idx, depth + 1);
        let right = self.grow(&mut right_idx, depth + 1);
        self.nodes[slot].left = left;
        self.nodes[slot].right = right;
        slot
    }
}

/// Grow one tree over the rows in `idx`. The optional `seed` drives
/// per-split feature subsampling; splits are searched deterministically.
pub(super) fn grow_tree(
    x: &[Vec<f64>],
    y: &[f64],
    idx: &[usize],
    cfg: &TreeConfig,
    seed: Option<u64>,
) -> TreeModel {
    let mut grower = Grower {
        x,
        y,
        cfg,
        rng: seed.map(ChaCha8Rng::seed_from_u64),
        nodes: Vec::new(),
    };
    let mut idx = idx.to_vec();
    let root = grower.grow(&mut idx, 0);
    debug_assert_eq!(root, 0);
    TreeModel {
        nodes: grower.nodes,
    }
}

pub(super) fn fit_decision_tree(spec: &RegressorSpec, x: &[Vec<f64>], y: &[f64]) -> FittedState {
    let cfg = TreeConfig {
        max_depth: spec.param("max_depth") as usize,
        min_samples_leaf: spec.param("min_samples_leaf") as usize,
        features_per_split: None,
    };
    let idx: Vec<usize> = (0..x.len()).collect();
    FittedState::Tree {
        tree: grow_tree(x, y, &idx, &cfg, None),
    }
}
