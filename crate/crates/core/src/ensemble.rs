//! Mean-vote regression committees and the genetic search over committee
//! membership and member hyperparameters.
//!
//! The committee genome carries one inclusion bit per pool kind plus that
//! kind's hyperparameter genes, so the search can drop regressors
//! entirely. Fitness is k-fold cross-validated MAE with folds and member
//! seeds pinned to the search seed, which keeps fitness a pure function
//! of the genome. The default-configuration committee is planted in the
//! initial population, so the optimized result can never be worse than
//! the baseline it is compared against.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::{self, GaConfig, GaError, GeneDomain, GeneSpace, GeneValue, Genome};
use crate::regressors::{
    self, param_schema, FittedRegressor, RegressorError, RegressorKind, RegressorSpec,
};
use crate::seeds;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("EmptyCommittee: a committee needs at least one member")]
    EmptyCommittee,
    #[error("DuplicateKind: `{0}` appears more than once")]
    DuplicateKind(String),
    #[error("TooFewRows: need at least {need} rows, got {got}")]
    TooFewRows { need: usize, got: usize },
    #[error("Member {kind}: {source}")]
    Member {
        kind: RegressorKind,
        source: RegressorError,
    },
    #[error(transparent)]
    Ga(#[from] GaError),
}

/// An ordered set of member specs, each kind at most once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Committee {
    members: Vec<RegressorSpec>,
}

impl Committee {
    pub fn new(members: Vec<RegressorSpec>) -> Result<Self, EnsembleError> {
        if members.is_empty() {
            return Err(EnsembleError::EmptyCommittee);
        }
        for (i, a) in members.iter().enumerate() {
            if members[..i].iter().any(|b| b.kind == a.kind) {
                return Err(EnsembleError::DuplicateKind(a.kind.to_string()));
            }
        }
        Ok(Committee { members })
    }

    /// Every pool kind with schema-default parameters.
    pub fn default_for_pool(pool: &[RegressorKind], seed: u64) -> Result<Self, EnsembleError> {
        Committee::new(
            pool.iter()
                .map(|&kind| RegressorSpec::with_defaults(kind, seed))
                .collect(),
        )
    }

    pub fn members(&self) -> &[RegressorSpec] {
        &self.members
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedCommittee {
    pub committee: Committee,
    pub fitted: Vec<FittedRegressor>,
}

/// Fit each member independently on the same data (members in parallel).
pub fn fit_committee(
    committee: &Committee,
    x: &[Vec<f64>],
    y: &[f64],
) -> Result<FittedCommittee, EnsembleError> {
    let results = crate::exec::map_slice(committee.members(), |spec| {
        regressors::fit(spec, x, y).map_err(|source| EnsembleError::Member {
            kind: spec.kind,
            source,
        })
    });
    let mut fitted = Vec::with_capacity(results.len());
    for r in results {
        fitted.push(r?);
    }
    Ok(FittedCommittee {
        committee: committee.clone(),
        fitted,
    })
}

/// Arithmetic mean of the member predictions, row by row.
pub fn vote_predict(model: &FittedCommittee, x: &[Vec<f64>]) -> Result<Vec<f64>, EnsembleError> {
    let per_member = crate::exec::map_slice(&model.fitted, |member| {
        regressors::predict(member, x).map_err(|source| EnsembleError::Member {
            kind: member.spec.kind,
            source,
        })
    });
    let mut columns = Vec::with_capacity(per_member.len());
    for c in per_member {
        columns.push(c?);
    }
    let k = columns.len() as f64;
    Ok((0..x.len())
        .map(|row| columns.iter().map(|c| c[row]).sum::<f64>() / k)
        .collect())
}

/// Cross-validated MAE and MSE.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CvScore {
    pub mae: f64,
    pub mse: f64,
}

/// Deterministic k-fold split: indices shuffled from `seed`, folds as
/// contiguous chunks of the shuffled order.
pub fn cross_validate(
    committee: &Committee,
    x: &[Vec<f64>],
    y: &[f64],
    folds: usize,
    seed: u64,
) -> Result<CvScore, EnsembleError> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    let n = x.len();
    if folds < 2 || n < folds {
        return Err(EnsembleError::TooFewRows {
            need: folds.max(2),
            got: n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut mae_acc = 0.0;
    let mut mse_acc = 0.0;
    for fold in 0..folds {
        let lo = fold * n / folds;
        let hi = (fold + 1) * n / folds;
        let test_idx = &order[lo..hi];
        let train_idx: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();

        let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| x[i].clone()).collect();
        let train_y: Vec<f64> = train_idx.iter().map(|&i| y[i]).collect();
        let test_x: Vec<Vec<f64>> = test_idx.iter().map(|&i| x[i].clone()).collect();
        let test_y: Vec<f64> = test_idx.iter().map(|&i| y[i]).collect();

        let fitted = fit_committee(committee, &train_x, &train_y)?;
        let pred = vote_predict(&fitted, &test_x)?;
        mae_acc += crate::stats::mae(&test_y, &pred);
        mse_acc += crate::stats::mse(&test_y, &pred);
    }
    Ok(CvScore {
        mae: mae_acc / folds as f64,
        mse: mse_acc / folds as f64,
    })
}

/// Committee fitness: mean held-out MAE over the folds.
pub fn evaluate_committee(
    committee: &Committee,
    x: &[Vec<f64>],
    y: &[f64],
    folds: usize,
    seed: u64,
) -> Result<f64, EnsembleError> {
    Ok(cross_validate(committee, x, y, folds, seed)?.mae)
}

fn inclusion_gene(kind: RegressorKind) -> String {
    format!("use_{}", kind.name())
}

fn param_gene(kind: RegressorKind, param: &str) -> String {
    format!("{}__{param}", kind.name())
}

/// Gene space of a pool: one inclusion bit per kind plus its
/// hyperparameter genes, domains straight from the schema table.
pub fn committee_space(pool: &[RegressorKind]) -> GeneSpace {
    let mut space = GeneSpace::new();
    for &kind in pool {
        space.push(inclusion_gene(kind), GeneDomain::Int { lo: 0, hi: 1 });
        for p in param_schema(kind) {
            let domain = if p.integral {
                GeneDomain::Int {
                    lo: p.min as i64,
                    hi: p.max as i64,
                }
            } else if p.log_uniform {
                GeneDomain::LogReal { lo: p.min, hi: p.max }
            } else {
                GeneDomain::Real { lo: p.min, hi: p.max }
            };
            space.push(param_gene(kind, p.name), domain);
        }
    }
    space
}

/// The genome of the default-configuration committee (everything
/// included, schema defaults).
pub fn default_genome(pool: &[RegressorKind]) -> Genome {
    let mut values = std::collections::BTreeMap::new();
    for &kind in pool {
        values.insert(inclusion_gene(kind), GeneValue::Int(1));
        for p in param_schema(kind) {
            let value = if p.integral {
                GeneValue::Int(p.default as i64)
            } else {
                GeneValue::Real(p.default)
            };
            values.insert(param_gene(kind, p.name), value);
        }
    }
    Genome { values }
}

/// Decode a genome to a committee; None when every inclusion bit is off.
pub fn decode_committee(
    genome: &Genome,
    pool: &[RegressorKind],
    member_seed: u64,
) -> Option<Committee> {
    let mut members = Vec::new();
    for &kind in pool {
        if genome.get(&inclusion_gene(kind)).as_int() == 0 {
            continue;
        }
        let mut spec = RegressorSpec::with_defaults(kind, member_seed);
        for p in param_schema(kind) {
            let gene = genome.get(&param_gene(kind, p.name));
            let value = if p.integral {
                gene.as_int() as f64
            } else {
                gene.as_real()
            };
            spec.params.insert(p.name.to_string(), value);
        }
        members.push(spec);
    }
    Committee::new(members).ok()
}

/// Everything the optimizer reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub default_score: CvScore,
    pub optimized_score: CvScore,
    pub mae_reduction_pct: f64,
    pub mse_reduction_pct: f64,
    pub history: Vec<f64>,
    pub best_committee: Committee,
}

impl OptimizeReport {
    /// Plain-text comparison table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str("committee            MAE          MSE\n");
        out.push_str(&format!(
            "default     {:>12.6} {:>12.6}\n",
            self.default_score.mae, self.default_score.mse
        ));
        out.push_str(&format!(
            "optimized   {:>12.6} {:>12.6}\n",
            self.optimized_score.mae, self.optimized_score.mse
        ));
        out.push_str(&format!(
            "reduction   {:>11.2}% {:>11.2}%\n",
            self.mae_reduction_pct, self.mse_reduction_pct
        ));
        out
    }
}

pub struct OptimizeOutcome {
    pub best: FittedCommittee,
    pub report: OptimizeReport,
}

/// GA over committee membership and hyperparameters; fitness is CV MAE.
///
/// Fold assignment and member seeds derive from `config.seed` alone, so
/// a genome always evaluates to the same fitness, and the winning
/// committee is refit on the full data before being returned.
pub fn optimize_committee(
    pool: &[RegressorKind],
    x: &[Vec<f64>],
    y: &[f64],
    config: &GaConfig,
    folds: usize,
    checkpoint_dir: Option<&std::path::Path>,
) -> Result<OptimizeOutcome, EnsembleError> {
    if pool.is_empty() {
        return Err(EnsembleError::EmptyCommittee);
    }
    let cv_seed = seeds::derive(config.seed, &[0xCF]);
    let member_seed = seeds::derive(config.seed, &[0x3E]);

    let space = committee_space(pool);
    let fitness = |genome: &Genome, _eval_seed: u64| -> Result<f64, String> {
        let committee = decode_committee(genome, pool, member_seed)
            .ok_or_else(|| "no members included".to_string())?;
        evaluate_committee(&committee, x, y, folds, cv_seed).map_err(|e| e.to_string())
    };

    let baseline = default_genome(pool);
    let outcome = evolution::run_ga(&space, &fitness, config, &[baseline], checkpoint_dir)?;

    let default_committee =
        Committee::default_for_pool(pool, member_seed).expect("non-empty pool checked");
    let default_score = cross_validate(&default_committee, x, y, folds, cv_seed)?;
    let best_committee = decode_committee(&outcome.best, pool, member_seed)
        .expect("winning genome decodes; the seeded baseline always does");
    let optimized_score = cross_validate(&best_committee, x, y, folds, cv_seed)?;

    let pct = |default: f64, optimized: f64| {
        if default > 0.0 {
            (default - optimized) / default * 100.0
        } else {
            0.0
        }
    };
    let report = OptimizeReport {
        default_score,
        optimized_score,
        mae_reduction_pct: pct(default_score.mae, optimized_score.mae),
        mse_reduction_pct: pct(default_score.mse, optimized_score.mse),
        history: outcome.history,
        best_committee: best_committee.clone(),
    };
    let best = fit_committee(&best_committee, x, y)?;
    Ok(OptimizeOutcome { best, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regressors::FittedState;

    fn linear_data(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / n as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0] + 1.0).collect();
        (x, y)
    }

    fn hand_member(weights: Vec<f64>, intercept: f64) -> FittedRegressor {
        FittedRegressor {
            spec: RegressorSpec::with_defaults(RegressorKind::Ols, 0),
            input_dim: weights.len(),
            state: FittedState::Linear { weights, intercept },
            train_score: 0.0,
        }
    }

    #[test]
    fn singleton_committee_equals_member() {
        let (x, y) = linear_data(12);
        let committee =
            Committee::new(vec![RegressorSpec::with_defaults(RegressorKind::Ols, 0)]).unwrap();
        let fitted = fit_committee(&committee, &x, &y).unwrap();
        let vote = vote_predict(&fitted, &x).unwrap();
        let member = regressors::predict(&fitted.fitted[0], &x).unwrap();
        assert_eq!(vote, member);
    }

    #[test]
    fn vote_is_row_mean() {
        // members are y = x and y = 2 − x, so the vote at any x is 1
        let committee = Committee::new(vec![
            RegressorSpec::with_defaults(RegressorKind::Ols, 0),
            RegressorSpec::with_defaults(RegressorKind::DecisionTree, 0),
        ])
        .unwrap();
        let fitted = FittedCommittee {
            committee,
            fitted: vec![hand_member(vec![1.0], 0.0), hand_member(vec![-1.0], 2.0)],
        };
        let vote = vote_predict(&fitted, &[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(vote, vec![1.0, 1.0]);

        let three = FittedCommittee {
            committee: fitted.committee.clone(),
            fitted: vec![
                hand_member(vec![0.0], 1.0),
                hand_member(vec![0.0], 2.0),
                hand_member(vec![0.0], 6.0),
            ],
        };
        let vote = vote_predict(&three, &[vec![0.0]]).unwrap();
        assert_eq!(vote, vec![3.0]);
    }

    #[test]
    fn vote_matches_column_mean_property() {
        let (x, y) = linear_data(20);
        let committee = Committee::new(vec![
            RegressorSpec::with_defaults(RegressorKind::Ols, 1),
            RegressorSpec::with_defaults(RegressorKind::DecisionTree, 1),
            RegressorSpec::with_defaults(RegressorKind::RandomForest, 1),
        ])
        .unwrap();
        let fitted = fit_committee(&committee, &x, &y).unwrap();
        let vote = vote_predict(&fitted, &x).unwrap();
        let per_member: Vec<Vec<f64>> = fitted
            .fitted
            .iter()
            .map(|m| regressors::predict(m, &x).unwrap())
            .collect();
        for (row, &v) in vote.iter().enumerate() {
            let mean =
                per_member.iter().map(|c| c[row]).sum::<f64>() / per_member.len() as f64;
            assert!((v - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_committee_rejected() {
        assert!(matches!(
            Committee::new(vec![]),
            Err(EnsembleError::EmptyCommittee)
        ));
    }

    #[test]
    fn duplicate_kind_rejected() {
        let members = vec![
            RegressorSpec::with_defaults(RegressorKind::Ols, 0),
            RegressorSpec::with_defaults(RegressorKind::Ols, 1),
        ];
        assert!(matches!(
            Committee::new(members),
            Err(EnsembleError::DuplicateKind(_))
        ));
    }

    #[test]
    fn exact_model_scores_near_zero() {
        let (x, y) = linear_data(25);
        let committee =
            Committee::new(vec![RegressorSpec::with_defaults(RegressorKind::Ols, 0)]).unwrap();
        let fitness = evaluate_committee(&committee, &x, &y, 5, 42).unwrap();
        assert!(fitness < 1e-8, "fitness {fitness}");
    }

    #[test]
    fn mean_predictor_scores_half_on_balanced_binary_target() {
        // constant features force the tree to predict the train-fold mean;
        // the seed keeps every fold balanced so that mean is exactly 0.5
        let x: Vec<Vec<f64>> = (0..8).map(|_| vec![1.0]).collect();
        let y: Vec<f64> = (0..8).map(|i| (i % 2) as f64).collect();
        let committee = Committee::new(vec![RegressorSpec::with_defaults(
            RegressorKind::DecisionTree,
            0,
        )])
        .unwrap();
        let balanced_seed = (0..200u64)
            .find(|&seed| {
                evaluate_committee(&committee, &x, &y, 4, seed).unwrap() == 0.5
            })
            .expect("some seed yields balanced folds");
        let fitness = evaluate_committee(&committee, &x, &y, 4, balanced_seed).unwrap();
        assert_eq!(fitness, 0.5);
    }

    #[test]
    fn folds_exceeding_rows_rejected() {
        let (x, y) = linear_data(4);
        let committee =
            Committee::new(vec![RegressorSpec::with_defaults(RegressorKind::Ols, 0)]).unwrap();
        assert!(matches!(
            evaluate_committee(&committee, &x, &y, 5, 0),
            Err(EnsembleError::TooFewRows { .. })
        ));
    }

    fn small_config(seed: u64) -> GaConfig {
        GaConfig {
            population_size: 8,
            generations: 3,
            seed,
            ..GaConfig::default()
        }
    }

    #[test]
    fn optimizer_never_loses_to_default() {
        let (x, y) = linear_data(30);
        let pool = [RegressorKind::Ols, RegressorKind::DecisionTree];
        let outcome = optimize_committee(&pool, &x, &y, &small_config(42), 5, None).unwrap();
        assert!(
            outcome.report.optimized_score.mae <= outcome.report.default_score.mae,
            "{:?}",
            outcome.report
        );
        assert!(outcome.report.mae_reduction_pct >= 0.0);
    }

    #[test]
    fn optimizer_single_kind_pool() {
        let (x, y) = linear_data(30);
        let pool = [RegressorKind::DecisionTree];
        let outcome = optimize_committee(&pool, &x, &y, &small_config(3), 3, None).unwrap();
        assert_eq!(outcome.best.committee.members().len(), 1);
        assert_eq!(
            outcome.best.committee.members()[0].kind,
            RegressorKind::DecisionTree
        );
    }

    #[test]
    fn optimizer_deterministic() {
        let (x, y) = linear_data(24);
        let pool = [RegressorKind::Ols, RegressorKind::SgdLinear];
        let a = optimize_committee(&pool, &x, &y, &small_config(9), 3, None).unwrap();
        let b = optimize_committee(&pool, &x, &y, &small_config(9), 3, None).unwrap();
        assert_eq!(a.best.committee, b.best.committee);
        assert_eq!(a.report.history, b.report.history);
    }

    #[test]
    fn ga_history_non_increasing() {
        let (x, y) = linear_data(24);
        let pool = [RegressorKind::Ols, RegressorKind::DecisionTree];
        let outcome = optimize_committee(&pool, &x, &y, &small_config(5), 3, None).unwrap();
        for pair in outcome.report.history.windows(2) {
            assert!(pair[1] <= pair[0]);
        }
    }
}
