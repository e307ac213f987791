//! Bootstrap ensembles of trees: random forest (with ⌈d/3⌉ feature
//! subsampling per split) and plain bagging.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tree::{grow_tree, TreeConfig};
use super::{FittedState, RegressorSpec};
use crate::seeds;

fn bootstrap_indices(rng: &mut ChaCha8Rng, n: usize, draws: usize) -> Vec<usize> {
    (0..draws).map(|_| rng.random_range(0..n)).collect()
}

pub(super) fn fit_random_forest(spec: &RegressorSpec, x: &[Vec<f64>], y: &[f64]) -> FittedState {
    let n = x.len();
    let d = x[0].len();
    let cfg = TreeConfig {
        max_depth: spec.param("max_depth") as usize,
        min_samples_leaf: spec.param("min_samples_leaf") as usize,
        features_per_split: Some(d.div_ceil(3)),
    };
    let n_trees = spec.param("n_trees") as usize;
    let trees = (0..n_trees)
        .map(|t| {
            let tree_seed = seeds::derive(spec.seed, &[t as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
            let idx = bootstrap_indices(&mut rng, n, n);
            grow_tree(x, y, &idx, &cfg, Some(seeds::derive(tree_seed, &[1])))
        })
        .collect();
    FittedState::Forest { trees }
}

pub(super) fn fit_bagging(spec: &RegressorSpec, x: &[Vec<f64>], y: &[f64]) -> FittedState {
    let n = x.len();
    let cfg = TreeConfig {
        max_depth: spec.param("max_depth") as usize,
        min_samples_leaf: 1,
        features_per_split: None,
    };
    let n_estimators = spec.param("n_estimators") as usize;
    let draws = ((spec.param("subsample") * n as f64).round() as usize).clamp(1, n);
    let trees = (0..n_estimators)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(spec.seed, &[t as u64]));
            let idx = bootstrap_indices(&mut rng, n, draws);
            grow_tree(x, y, &idx, &cfg, None)
        })
        .collect();
    FittedState::Forest { trees }
}
