//! Boosted tree members: AdaBoost.R2 with linear loss and weighted-median
//! voting, and gradient boosting with squared loss and shrinkage.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tree::{grow_tree, TreeConfig, TreeModel};
use super::{FittedState, RegressorSpec};
use crate::seeds;

/// Sample `n` indices from the categorical distribution given by `weights`
/// (assumed normalized) by inverse-CDF lookup.
fn weighted_bootstrap(rng: &mut ChaCha8Rng, weights: &[f64], n: usize) -> Vec<usize> {
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cdf.push(acc);
    }
    (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * acc;
            cdf.partition_point(|&c| c < u).min(weights.len() - 1)
        })
        .collect()
}

pub(super) fn fit_adaboost(spec: &RegressorSpec, x: &[Vec<f64>], y: &[f64]) -> FittedState {
    let n = x.len();
    let cfg = TreeConfig {
        max_depth: spec.param("max_depth") as usize,
        min_samples_leaf: 1,
        features_per_split: None,
    };
    let rounds = spec.param("n_estimators") as usize;
    let lr = spec.param("learning_rate");

    let mut weights = vec![1.0 / n as f64; n];
    let mut trees: Vec<TreeModel> = Vec::new();
    let mut log_inv_betas: Vec<f64> = Vec::new();
    for m in 0..rounds {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(spec.seed, &[m as u64]));
        let idx = weighted_bootstrap(&mut rng, &weights, n);
        let tree = grow_tree(x, y, &idx, &cfg, None);
        let errors: Vec<f64> = x
            .iter()
            .zip(y)
            .map(|(row, &t)| (tree.predict_row(row) - t).abs())
            .collect();
        let max_err = errors.iter().cloned().fold(0.0, f64::max);
        if max_err <= 0.0 {
            // perfect learner; keep it with an effectively infinite vote
            trees.push(tree);
            log_inv_betas.push((1.0f64 / 1e-10).ln());
            break;
        }
        let losses: Vec<f64> = errors.iter().map(|e| e / max_err).collect();
        let eps: f64 = weights.iter().zip(&losses).map(|(w, l)| w * l).sum();
        if eps >= 0.5 {
            if trees.is_empty() {
                trees.push(tree);
                log_inv_betas.push(1e-10);
            }
            break;
        }
        let beta = eps / (1.0 - eps);
        trees.push(tree);
        log_inv_betas.push(lr * (1.0 / beta).ln());
        for (w, l) in weights.iter_mut().zip(&losses) {
            *w *= beta.powf(lr * (1.0 - l));
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
    }
    FittedState::Adaboost {
        trees,
        log_inv_betas,
    }
}

/// Weighted median of per-tree predictions, sklearn-style: sort the
/// predictions, walk the weight CDF, take the first at or past half.
pub(super) fn weighted_median(trees: &[TreeModel], weights: &[f64], row: &[f64]) -> f64 {
    let mut preds: Vec<(f64, f64)> = trees
        .iter()
        .zip(weights)
        .map(|(t, &w)| (t.predict_row(row), w))
        .collect();
    preds.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: f64 = preds.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    for &(p, w) in &preds {
        acc += w;
        if acc >= 0.5 * total {
            return p;
        }
    }
    preds.last().map(|p| p.0).unwrap_or(0.0)
}

pub(super) fn fit_gradient_boosting(spec: &RegressorSpec, x: &[Vec<f64>], y: &[f64]) -> FittedState {
    let n = x.len();
    let cfg = TreeConfig {
        max_depth: spec.param("max_depth") as usize,
        min_samples_leaf: 1,
        features_per_split: None,
    };
    let rounds = spec.param("n_estimators") as usize;
    let shrinkage = spec.param("learning_rate");
    let subsample = spec.param("subsample");
    let baseline = y.iter().sum::<f64>() / n as f64;

    let mut current: Vec<f64> = vec![baseline; n];
    let mut trees: Vec<TreeModel> = Vec::with_capacity(rounds);
    let all: Vec<usize> = (0..n).collect();
    for m in 0..rounds {
        let residual: Vec<f64> = y.iter().zip(&current).map(|(t, f)| t - f).collect();
        let idx = if subsample < 1.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(spec.seed, &[m as u64]));
            let mut pool = all.clone();
            pool.shuffle(&mut rng);
            let take = ((subsample * n as f64).round() as usize).clamp(1, n);
            let mut sub = pool[..take].to_vec();
            sub.sort_unstable();
            sub
        } else {
            all.clone()
        };
        let tree = grow_tree(x, &residual, &idx, &cfg, None);
        for (f, row) in current.iter_mut().zip(x) {
            *f += shrinkage * tree.predict_row(row);
        }
        trees.push(tree);
    }
    FittedState::GradientBoost {
        baseline,
        shrinkage,
        trees,
    }
}
