//! The committee member pool: ten configurable regression algorithms
//! behind one `fit`/`predict` surface.
//!
//! Every spec carries an explicit seed and a numeric parameter map
//! validated against the per-kind schema below; fitting is deterministic
//! given (spec, data). Fitted models serialize to JSON for the model
//! store.
//!
//! Hyperparameter ranges (searched by the committee GA, defaults in
//! parentheses):
//!
//! | kind | parameters |
//! |------|------------|
//! | `ols` | — |
//! | `sgd_linear` | learning_rate [1e-4, 0.5] log (0.01); n_iterations [50, 500] (100); schedule 0=constant 1=invscaling 2=adaptive (0) |
//! | `passive_aggressive` | c [0.01, 10] log (1); epsilon [0.001, 0.5] log (0.1); n_iterations [50, 500] (100) |
//! | `ransac` | n_iterations [10, 200] (50) |
//! | `decision_tree` | max_depth [2, 10] (6); min_samples_leaf [1, 10] (1) |
//! | `random_forest` | n_trees [10, 200] (100); max_depth [2, 10] (10); min_samples_leaf [1, 10] (1) |
//! | `bagging` | n_estimators [10, 100] (20); max_depth [2, 10] (10); subsample [0.5, 1.0] (1.0) |
//! | `adaboost` | n_estimators [10, 100] (50); max_depth [2, 6] (3); learning_rate [0.01, 1.0] log (1.0) |
//! | `gradient_boosting` | n_estimators [10, 200] (100); max_depth [2, 6] (3); learning_rate [0.01, 1.0] log (0.1); subsample [0.5, 1.0] (1.0) |
//! | `svr_linear` | c [0.01, 10] log (1); epsilon [0.001, 0.5] (0.1); learning_rate [1e-4, 0.1] log (0.01); n_iterations [100, 1000] (500) |

mod boosting;
mod forest;
mod linear;
mod ransac;
mod tree;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use tree::{TreeModel, TreeNode};

#[derive(Debug, Error)]
pub enum RegressorError {
    #[error("InvalidParam: {0}")]
    InvalidParam(String),
    #[error("DegenerateData: {0}")]
    DegenerateData(String),
    #[error("DimensionMismatch: model expects {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// The regressor families of the committee pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorKind {
    Ols,
    SgdLinear,
    PassiveAggressive,
    Ransac,
    DecisionTree,
    RandomForest,
    Bagging,
    Adaboost,
    GradientBoosting,
    SvrLinear,
}

impl RegressorKind {
    pub const ALL: [RegressorKind; 10] = [
        RegressorKind::Ols,
        RegressorKind::SgdLinear,
        RegressorKind::PassiveAggressive,
        RegressorKind::Ransac,
        RegressorKind::DecisionTree,
        RegressorKind::RandomForest,
        RegressorKind::Bagging,
        RegressorKind::Adaboost,
        RegressorKind::GradientBoosting,
        RegressorKind::SvrLinear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegressorKind::Ols => "ols",
            RegressorKind::SgdLinear => "sgd_linear",
            RegressorKind::PassiveAggressive => "passive_aggressive",
            RegressorKind::Ransac => "ransac",
            RegressorKind::DecisionTree => "decision_tree",
            RegressorKind::RandomForest => "random_forest",
            RegressorKind::Bagging => "bagging",
            RegressorKind::Adaboost => "adaboost",
            RegressorKind::GradientBoosting => "gradient_boosting",
            RegressorKind::SvrLinear => "svr_linear",
        }
    }

    pub fn parse(name: &str) -> Option<RegressorKind> {
        RegressorKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for RegressorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Declared range of one hyperparameter.
#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub name: &'static str,
    pub min: f64,
    pub max: f64,
    pub default: f64,
    pub integral: bool,
    /// GA samples this gene on a log scale.
    pub log_uniform: bool,
}

const fn p(name: &'static str, min: f64, max: f64, default: f64, integral: bool, log_uniform: bool) -> ParamSpec {
    ParamSpec {
        name,
        min,
        max,
        default,
        integral,
        log_uniform,
    }
}

static SGD_PARAMS: [ParamSpec; 3] = [
    p("learning_rate", 1e-4, 0.5, 0.01, false, true),
    p("n_iterations", 50.0, 500.0, 100.0, true, false),
    p("schedule", 0.0, 2.0, 0.0, true, false),
];
static PA_PARAMS: [ParamSpec; 3] = [
    p("c", 0.01, 10.0, 1.0, false, true),
    p("epsilon", 0.001, 0.5, 0.1, false, true),
    p("n_iterations", 50.0, 500.0, 100.0, true, false),
];
static RANSAC_PARAMS: [ParamSpec; 1] = [p("n_iterations", 10.0, 200.0, 50.0, true, false)];
static TREE_PARAMS: [ParamSpec; 2] = [
    p("max_depth", 2.0, 10.0, 6.0, true, false),
    p("min_samples_leaf", 1.0, 10.0, 1.0, true, false),
];
static FOREST_PARAMS: [ParamSpec; 3] = [
    p("n_trees", 10.0, 200.0, 100.0, true, false),
    p("max_depth", 2.0, 10.0, 10.0, true, false),
    p("min_samples_leaf", 1.0, 10.0, 1.0, true, false),
];
static BAGGING_PARAMS: [ParamSpec; 3] = [
    p("n_estimators", 10.0, 100.0, 20.0, true, false),
    p("max_depth", 2.0, 10.0, 10.0, true, false),
    p("subsample", 0.5, 1.0, 1.0, false, false),
];
static ADABOOST_PARAMS: [ParamSpec; 3] = [
    p("n_estimators", 10.0, 100.0, 50.0, true, false),
    p("max_depth", 2.0, 6.0, 3.0, true, false),
    p("learning_rate", 0.01, 1.0, 1.0, false, true),
];
static GB_PARAMS: [ParamSpec; 4] = [
    p("n_estimators", 10.0, 200.0, 100.0, true, false),
    p("max_depth", 2.0, 6.0, 3.0, true, false),
    p("learning_rate", 0.01, 1.0, 0.1, false, true),
    p("subsample", 0.5, 1.0, 1.0, false, false),
];
static SVR_PARAMS: [ParamSpec; 4] = [
    p("c", 0.01, 10.0, 1.0, false, true),
    p("epsilon", 0.001, 0.5, 0.1, false, false),
    p("learning_rate", 1e-4, 0.1, 0.01, false, true),
    p("n_iterations", 100.0, 1000.0, 500.0, true, false),
];

/// Declared hyperparameter schema of a kind; the ranges in the module
/// docs come from here.
pub fn param_schema(kind: RegressorKind) -> &'static [ParamSpec] {
    match kind {
        RegressorKind::Ols => &[],
        RegressorKind::SgdLinear => &SGD_PARAMS,
        RegressorKind::PassiveAggressive => &PA_PARAMS,
        RegressorKind::Ransac => &RANSAC_PARAMS,
        RegressorKind::DecisionTree => &TREE_PARAMS,
        RegressorKind::RandomForest => &FOREST_PARAMS,
        RegressorKind::Bagging => &BAGGING_PARAMS,
        RegressorKind::Adaboost => &ADABOOST_PARAMS,
        RegressorKind::GradientBoosting => &GB_PARAMS,
        RegressorKind::SvrLinear => &SVR_PARAMS,
    }
}

/// A configured (not yet fitted) regressor. Parameters omitted from the
/// map take their schema defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorSpec {
    pub kind: RegressorKind,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
}

impl RegressorSpec {
    pub fn with_defaults(kind: RegressorKind, seed: u64) -> Self {
        RegressorSpec {
            kind,
            params: BTreeMap::new(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), RegressorError> {
        let schema = param_schema(self.kind);
        for (name, &value) in &self.params {
            let spec = schema
                .iter()
                .find(|s| s.name == name.as_str())
                .ok_or_else(|| {
                    RegressorError::InvalidParam(format!("{name} (unknown for {})", self.kind))
                })?;
            if !value.is_finite() || value < spec.min || value > spec.max {
                return Err(RegressorError::InvalidParam(format!(
                    "{name}={value} outside [{}, {}]",
                    spec.min, spec.max
                )));
            }
            if spec.integral && value.fract() != 0.0 {
                return Err(RegressorError::InvalidParam(format!(
                    "{name}={value} must be an integer"
                )));
            }
        }
        Ok(())
    }

    /// Parameter value with schema default fallback. Panics on names not
    /// in the schema; callers only use schema names.
    pub fn param(&self, name: &str) -> f64 {
        let spec = param_schema(self.kind)
            .iter()
            .find(|s| s.name == name)
            .unwrap_or_else(|| panic!("{} has no param {name}", self.kind));
        self.params.get(name).copied().unwrap_or(spec.default)
    }

    fn param_usize(&self, name: &str) -> usize {
        self.param(name) as usize
    }
}

/// Opaque fitted parameters, tagged by family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FittedState {
    Linear {
        weights: Vec<f64>,
        intercept: f64,
    },
    Tree {
        tree: TreeModel,
    },
    Forest {
        trees: Vec<TreeModel>,
    },
    Adaboost {
        trees: Vec<TreeModel>,
        log_inv_betas: Vec<f64>,
    },
    GradientBoost {
        baseline: f64,
        shrinkage: f64,
        trees: Vec<TreeModel>,
    },
}

/// A fitted committee member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedRegressor {
    pub spec: RegressorSpec,
    pub input_dim: usize,
    pub state: FittedState,
    /// MAE on the training data.
    pub train_score: f64,
}

fn check_training_data(x: &[Vec<f64>], y: &[f64]) -> Result<usize, RegressorError> {
    if x.len() != y.len() {
        return Err(RegressorError::DegenerateData(format!(
            "X has {} rows but y has {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(RegressorError::DegenerateData(format!(
            "need at least 2 rows, got {}",
            x.len()
        )));
    }
    let d = x[0].len();
    if d == 0 {
        return Err(RegressorError::DegenerateData("zero feature columns".into()));
    }
    for row in x {
        if row.len() != d {
            return Err(RegressorError::DegenerateData("ragged feature matrix".into()));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(RegressorError::DegenerateData("non-finite feature value".into()));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(RegressorError::DegenerateData("non-finite target value".into()));
    }
    Ok(d)
}

/// Fit `spec` on `(x, y)`. Deterministic given the spec (seed included).
pub fn fit(spec: &RegressorSpec, x: &[Vec<f64>], y: &[f64]) -> Result<FittedRegressor, RegressorError> {
    spec.validate()?;
    let d = check_training_data(x, y)?;
    let state = match spec.kind {
        RegressorKind::Ols => linear::fit_ols(x, y)?,
        RegressorKind::SgdLinear => linear::fit_sgd(spec, x, y),
        RegressorKind::PassiveAggressive => linear::fit_passive_aggressive(spec, x, y),
        RegressorKind::SvrLinear => linear::fit_svr_linear(spec, x, y),
        RegressorKind::Ransac => ransac::fit_ransac(spec, x, y)?,
        RegressorKind::DecisionTree => tree::fit_decision_tree(spec, x, y),
        RegressorKind::RandomForest => forest::fit_random_forest(spec, x, y),
        RegressorKind::Bagging => forest::fit_bagging(spec, x, y),
        RegressorKind::Adaboost => boosting::fit_adaboost(spec, x, y),
        RegressorKind::GradientBoosting => boosting::fit_gradient_boosting(spec, x, y),
    };
    let mut fitted = FittedRegressor {
        spec: spec.clone(),
        input_dim: d,
        state,
        train_score: 0.0,
    };
    let train_pred = predict(&fitted, x)?;
    fitted.train_score = crate::stats::mae(y, &train_pred);
    Ok(fitted)
}

/// Predict one value per row of `x`; empty input yields an empty vector.
pub fn predict(model: &FittedRegressor, x: &[Vec<f64>]) -> Result<Vec<f64>, RegressorError> {
    for row in x {
        if row.len() != model.input_dim {
            return Err(RegressorError::DimensionMismatch {
                expected: model.input_dim,
                got: row.len(),
            });
        }
    }
    Ok(x.iter().map(|row| predict_row(model, row)).collect())
}

fn predict_row(model: &FittedRegressor, row: &[f64]) -> f64 {
    match &model.state {
        FittedState::Linear { weights, intercept } => {
            intercept + weights.iter().zip(row).map(|(w, v)| w * v).sum::<f64>()
        }
        FittedState::Tree { tree } => tree.predict_row(row),
        FittedState::Forest { trees } => {
            trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / trees.len() as f64
        }
        FittedState::Adaboost {
            trees,
            log_inv_betas,
        } => boosting::weighted_median(trees, log_inv_betas, row),
        FittedState::GradientBoost {
            baseline,
            shrinkage,
            trees,
        } => baseline + shrinkage * trees.iter().map(|t| t.predict_row(row)).sum::<f64>(),
    }
}
