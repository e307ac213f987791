//! Hybrid forecaster: an (S)ARIMA(X) base forecast, an MLP that models
//! the one-step error series, and a second MLP that associates past
//! ARIMA values, past modeled errors and future modeled errors into the
//! next series value.
//!
//! Windows follow four lag variables. For a prediction at time `t` the
//! association input is, in fixed order:
//!
//! ```text
//! arima[t-la+1 ..= t] | modeled_error[t-le .. t] | error_forecast[t .. t+fe]
//! ```
//!
//! so the current ARIMA one-step value is part of the input and an
//! identity-like association reproduces the plain ARIMA forecast. Future
//! modeled errors are produced by recursive one-step rollouts of the
//! error MLP, both when building training rows and at prediction time.
//! The training split is fixed at ⌊0.8·n⌋ and every reported metric is
//! computed on the remaining test span only. Series are expected
//! pre-scaled to [0, 1]; predictions are clipped to that range.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arima::{self, ArimaError, ArimaModel, ArimaOrder};
use crate::evolution::{self, GaConfig, GaError, GeneDomain, GeneSpace, Genome};
use crate::neuralnet::{Activation, LrSchedule, Mlp, MlpConfig, NnError, Solver};
use crate::seeds;
use crate::stats;

#[derive(Debug, Error)]
pub enum HybridError {
    #[error("LengthMismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("TooShort: need more than {need} points, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("InsufficientTraining: {0}")]
    InsufficientTraining(String),
    #[error("AllZeroTruth: MAPE is undefined when every truth value is zero")]
    AllZeroTruth,
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Arima(#[from] ArimaError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Ga(#[from] GaError),
}

/// The four searched window lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagConfig {
    pub lag_error: usize,
    pub forecast_association_error: usize,
    pub lag_association_error: usize,
    pub lag_association_arima: usize,
}

impl LagConfig {
    pub fn validate(&self) -> Result<(), HybridError> {
        for (name, v) in [
            ("lag_error", self.lag_error),
            ("forecast_association_error", self.forecast_association_error),
            ("lag_association_error", self.lag_association_error),
            ("lag_association_arima", self.lag_association_arima),
        ] {
            if v == 0 {
                return Err(HybridError::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    pub arima_order: ArimaOrder,
    pub error_mlp: MlpConfig,
    pub assoc_mlp: MlpConfig,
    pub lags: LagConfig,
    /// Names of the exogenous columns used, recorded for the model file.
    pub exog_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridModel {
    pub config: HybridConfig,
    pub arima: ArimaModel,
    pub error_mlp: Mlp,
    pub assoc_mlp: Mlp,
    /// ⌊0.8·n⌋ over the full series given to `fit_hybrid`.
    pub split_index: usize,
    pub n_total: usize,
    pub assoc_input_layout: String,
}

/// Pointwise `y − fitted`.
pub fn error_series(y: &[f64], arima_fitted: &[f64]) -> Result<Vec<f64>, HybridError> {
    if y.len() != arima_fitted.len() {
        return Err(HybridError::LengthMismatch {
            a: y.len(),
            b: arima_fitted.len(),
        });
    }
    Ok(y.iter().zip(arima_fitted).map(|(a, b)| a - b).collect())
}

/// Sliding one-step windows: row i = series[i..i+lag], target series[i+lag].
pub fn make_supervised(series: &[f64], lag: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>), HybridError> {
    if lag == 0 {
        return Err(HybridError::InvalidConfig("lag must be >= 1".into()));
    }
    if series.len() <= lag {
        return Err(HybridError::TooShort {
            need: lag,
            got: series.len(),
        });
    }
    let rows = series.len() - lag;
    let mut x = Vec::with_capacity(rows);
    let mut y = Vec::with_capacity(rows);
    for i in 0..rows {
        x.push(series[i..i + lag].to_vec());
        y.push(series[i + lag]);
    }
    Ok((x, y))
}

/// MAE, MSE and MAPE (as a fraction) on unit-scaled data. Zero truths
/// are excluded from MAPE and counted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastMetrics {
    pub mae: f64,
    pub mse: f64,
    pub mape: f64,
    pub zero_truth_excluded: usize,
}

pub fn metrics(y_true: &[f64], y_pred: &[f64]) -> Result<ForecastMetrics, HybridError> {
    if y_true.len() != y_pred.len() {
        return Err(HybridError::LengthMismatch {
            a: y_true.len(),
            b: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(HybridError::TooShort { need: 1, got: 0 });
    }
    let mut ape_sum = 0.0;
    let mut ape_n = 0usize;
    for (t, p) in y_true.iter().zip(y_pred) {
        if *t != 0.0 {
            ape_sum += ((t - p) / t).abs();
            ape_n += 1;
        }
    }
    if ape_n == 0 {
        return Err(HybridError::AllZeroTruth);
    }
    Ok(ForecastMetrics {
        mae: stats::mae(y_true, y_pred),
        mse: stats::mse(y_true, y_pred),
        mape: ape_sum / ape_n as f64,
        zero_truth_excluded: y_true.len() - ape_n,
    })
}

/// Roll the error MLP forward `steps` one-step predictions from `seed`
/// (the most recent `lag` error values, oldest first).
fn roll_error_forecast(error_mlp: &Mlp, seed: &[f64], steps: usize) -> Result<Vec<f64>, NnError> {
    let mut window = seed.to_vec();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let next = error_mlp.forward(&window)?;
        out.push(next);
        window.rotate_left(1);
        let last = window.len() - 1;
        window[last] = next;
    }
    Ok(out)
}

fn assoc_layout(lags: &LagConfig) -> String {
    format!(
        "arima[t-{la}+1..=t] | modeled_error[t-{le}..t] | error_forecast[t..t+{fe}]",
        la = lags.lag_association_arima,
        le = lags.lag_association_error,
        fe = lags.forecast_association_error
    )
}

/// Fit the full hybrid on `series` (already scaled to [0, 1]); the ARIMA
/// stage sees the first ⌊0.8·n⌋ points.
pub fn fit_hybrid(
    config: &HybridConfig,
    series: &[f64],
    exog: Option<&[Vec<f64>]>,
) -> Result<HybridModel, HybridError> {
    let n = series.len();
    let split = (0.8 * n as f64).floor() as usize;
    if split < 4 || split >= n {
        return Err(HybridError::InsufficientTraining(format!(
            "split {split} of {n} leaves no usable spans"
        )));
    }
    let exog_train = exog.map(|x| x[..split].to_vec());
    let arima_model = arima::fit(&series[..split], &config.arima_order, exog_train.as_deref())?;
    fit_hybrid_with_arima(config, series, arima_model)
}

/// Fit the MLP stages around an ARIMA model already fitted on
/// `series[..split]`; the search reuses one base fit across the
/// population since the lag genes do not touch it.
pub fn fit_hybrid_with_arima(
    config: &HybridConfig,
    series: &[f64],
    arima_model: ArimaModel,
) -> Result<HybridModel, HybridError> {
    config.lags.validate()?;
    let n = series.len();
    let split = arima_model.training.len();
    let offset = arima_model.fitted_offset;
    let lags = &config.lags;
    let (la, le, fe) = (
        lags.lag_association_arima,
        lags.lag_association_error,
        lags.forecast_association_error,
    );

    // error series on the usable train span (absolute index = offset + i)
    let errors = arima_model.residuals.clone();
    if errors.len() <= lags.lag_error + 1 {
        return Err(HybridError::InsufficientTraining(format!(
            "error series has {} points for lag_error {}",
            errors.len(),
            lags.lag_error
        )));
    }

    let (err_x, err_y) = make_supervised(&errors, lags.lag_error)?;
    let error_mlp = Mlp::init(config.error_mlp.clone(), lags.lag_error)?.train(&err_x, &err_y)?;

    // teacher-forced modeled errors at absolute times
    // [offset+lag_error, split)
    let modeled_start = offset + lags.lag_error;
    let mut modeled = Vec::with_capacity(split - modeled_start);
    for t in modeled_start..split {
        let w = &errors[t - lags.lag_error - offset..t - offset];
        modeled.push(error_mlp.forward(w)?);
    }

    // association rows over t ∈ [t_min, split)
    let t_min = (offset + la - 1).max(modeled_start + le);
    if t_min + 4 > split {
        return Err(HybridError::InsufficientTraining(format!(
            "association windows leave {} training rows",
            split.saturating_sub(t_min)
        )));
    }
    let mut assoc_x = Vec::with_capacity(split - t_min);
    let mut assoc_y = Vec::with_capacity(split - t_min);
    for t in t_min..split {
        let mut row = Vec::with_capacity(la + le + fe);
        for i in t + 1 - la..=t {
            row.push(arima_model.fitted_values[i - offset]);
        }
        for i in t - le..t {
            row.push(modeled[i - modeled_start]);
        }
        let seed = &errors[t - lags.lag_error - offset..t - offset];
        row.extend(roll_error_forecast(&error_mlp, seed, fe)?);
        assoc_x.push(row);
        assoc_y.push(series[t]);
    }
    let assoc_mlp = Mlp::init(config.assoc_mlp.clone(), la + le + fe)?.train(&assoc_x, &assoc_y)?;

    Ok(HybridModel {
        config: config.clone(),
        arima: arima_model,
        error_mlp,
        assoc_mlp,
        split_index: split,
        n_total: n,
        assoc_input_layout: assoc_layout(lags),
    })
}

/// Multi-step hybrid forecast from the training split; output clipped to
/// [0, 1].
pub fn predict_hybrid(
    model: &HybridModel,
    horizon: usize,
    exog_future: Option<&[Vec<f64>]>,
) -> Result<Vec<f64>, HybridError> {
    if horizon == 0 {
        return Err(HybridError::InvalidConfig("horizon must be >= 1".into()));
    }
    let lags = &model.config.lags;
    let (la, le, fe) = (
        lags.lag_association_arima,
        lags.lag_association_error,
        lags.forecast_association_error,
    );
    let split = model.split_index;
    let offset = model.arima.fitted_offset;
    let arima_forecast = arima::forecast(&model.arima, horizon, exog_future)?;

    let arima_at = |t: usize| -> f64 {
        if t < split {
            model.arima.fitted_values[t - offset]
        } else {
            arima_forecast[t - split]
        }
    };

    let errors = &model.arima.residuals;
    let modeled_start = offset + lags.lag_error;
    let mut modeled_past = Vec::with_capacity(split - modeled_start);
    for t in modeled_start..split {
        let w = &errors[t - lags.lag_error - offset..t - offset];
        modeled_past.push(model.error_mlp.forward(w)?);
    }
    let seed = &errors[split - lags.lag_error - offset..split - offset];
    let rolled = roll_error_forecast(&model.error_mlp, seed, horizon + fe - 1)?;
    let modeled_at = |t: usize| -> f64 {
        if t < split {
            modeled_past[t - modeled_start]
        } else {
            rolled[t - split]
        }
    };

    let mut out = Vec::with_capacity(horizon);
    for h in 0..horizon {
        let t = split + h;
        let mut row = Vec::with_capacity(la + le + fe);
        for i in t + 1 - la..=t {
            row.push(arima_at(i));
        }
        for i in t - le..t {
            row.push(modeled_at(i));
        }
        for i in t..t + fe {
            row.push(modeled_at(i));
        }
        out.push(model.assoc_mlp.forward(&row)?.clamp(0.0, 1.0));
    }
    Ok(out)
}

/// Hybrid vs plain-ARIMA comparison on the test span.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HybridReport {
    pub arima: ForecastMetrics,
    pub hybrid: ForecastMetrics,
}

impl HybridReport {
    pub fn render_table(&self) -> String {
        let row = |name: &str, m: &ForecastMetrics| {
            format!("{name:<8} {:>10.6} {:>10.6} {:>10.6}\n", m.mae, m.mse, m.mape)
        };
        let mut out = String::from("model           MAE        MSE       MAPE\n");
        out.push_str(&row("arima", &self.arima));
        out.push_str(&row("hybrid", &self.hybrid));
        out
    }
}

/// Evaluate a fitted hybrid against its own ARIMA stage on the held-out
/// 20% span.
pub fn compare_on_test(
    model: &HybridModel,
    series: &[f64],
    exog: Option<&[Vec<f64>]>,
) -> Result<HybridReport, HybridError> {
    let split = model.split_index;
    let horizon = series.len() - split;
    let y_test = &series[split..];
    let exog_future = exog.map(|x| x[split..].to_vec());
    let arima_pred = arima::forecast(&model.arima, horizon, exog_future.as_deref())?;
    let hybrid_pred = predict_hybrid(model, horizon, exog_future.as_deref())?;
    Ok(HybridReport {
        arima: metrics(y_test, &arima_pred)?,
        hybrid: metrics(y_test, &hybrid_pred)?,
    })
}

/// Where the search evaluates candidate genomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessSpan {
    /// MAE on the final 20% test span (paper-style; risks selection bias).
    TestSpan,
    /// MAE on the last 20% of the training span; the test span stays
    /// untouched until the final comparison.
    ValidationSpan,
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub arima_order: ArimaOrder,
    pub exog_columns: Vec<String>,
    pub fitness_span: FitnessSpan,
    pub mlp_max_epochs: usize,
    pub lag_lo: usize,
    pub lag_hi: usize,
    pub hidden_lo: usize,
    pub hidden_hi: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            arima_order: ArimaOrder::new(1, 1, 1),
            exog_columns: Vec::new(),
            fitness_span: FitnessSpan::TestSpan,
            mlp_max_epochs: 200,
            lag_lo: 1,
            lag_hi: 20,
            hidden_lo: 1,
            hidden_hi: 128,
        }
    }
}

/// Gene space: both MLP configs (activation, schedule, solver, three
/// hidden sizes) plus the four lag variables.
pub fn hybrid_space(options: &SearchOptions) -> GeneSpace {
    let mut space = GeneSpace::new();
    let activations: Vec<String> = vec![
        "identity".into(),
        "logistic".into(),
        "tanh".into(),
        "relu".into(),
    ];
    let schedules: Vec<String> = vec!["constant".into(), "invscaling".into(), "adaptive".into()];
    let solvers: Vec<String> = vec!["adam".into(), "lbfgs".into()];
    for prefix in ["err", "assoc"] {
        space.push(
            format!("{prefix}_activation"),
            GeneDomain::Cat {
                options: activations.clone(),
            },
        );
        space.push(
            format!("{prefix}_schedule"),
            GeneDomain::Cat {
                options: schedules.clone(),
            },
        );
        space.push(
            format!("{prefix}_solver"),
            GeneDomain::Cat {
                options: solvers.clone(),
            },
        );
        for layer in 1..=3 {
            space.push(
                format!("{prefix}_hidden_{layer}"),
                GeneDomain::Int {
                    lo: options.hidden_lo as i64,
                    hi: options.hidden_hi as i64,
                },
            );
        }
    }
    for lag in [
        "lag_error",
        "forecast_association_error",
        "lag_association_error",
        "lag_association_arima",
    ] {
        space.push(
            lag,
            GeneDomain::Int {
                lo: options.lag_lo as i64,
                hi: options.lag_hi as i64,
            },
        );
    }
    space
}

fn parse_activation(name: &str) -> Activation {
    match name {
        "logistic" => Activation::Logistic,
        "tanh" => Activation::Tanh,
        "relu" => Activation::Relu,
        _ => Activation::Identity,
    }
}

fn parse_schedule(name: &str) -> LrSchedule {
    match name {
        "invscaling" => LrSchedule::InvScaling,
        "adaptive" => LrSchedule::Adaptive,
        _ => LrSchedule::Constant,
    }
}

fn parse_solver(name: &str) -> Solver {
    match name {
        "lbfgs" => Solver::Lbfgs,
        _ => Solver::Adam,
    }
}

fn mlp_from_genes(
    genome: &Genome,
    prefix: &str,
    seed: u64,
    max_epochs: usize,
) -> MlpConfig {
    let hidden: Vec<usize> = (1..=3)
        .map(|l| genome.get(&format!("{prefix}_hidden_{l}")).as_int() as usize)
        .collect();
    let mut config = MlpConfig::new(
        parse_activation(genome.get(&format!("{prefix}_activation")).as_cat()),
        parse_schedule(genome.get(&format!("{prefix}_schedule")).as_cat()),
        parse_solver(genome.get(&format!("{prefix}_solver")).as_cat()),
        hidden,
        seed,
    );
    config.max_epochs = max_epochs;
    config.initial_lr = 0.01;
    config
}

/// Decode a genome into a full hybrid configuration. MLP seeds derive
/// from `base_seed` only, so a genome always maps to the same model.
pub fn decode_hybrid_config(
    genome: &Genome,
    options: &SearchOptions,
    base_seed: u64,
) -> HybridConfig {
    let lag = |name: &str| genome.get(name).as_int() as usize;
    HybridConfig {
        arima_order: options.arima_order,
        error_mlp: mlp_from_genes(genome, "err", seeds::derive(base_seed, &[0xE2]), options.mlp_max_epochs),
        assoc_mlp: mlp_from_genes(genome, "assoc", seeds::derive(base_seed, &[0xA5]), options.mlp_max_epochs),
        lags: LagConfig {
            lag_error: lag("lag_error"),
            forecast_association_error: lag("forecast_association_error"),
            lag_association_error: lag("lag_association_error"),
            lag_association_arima: lag("lag_association_arima"),
        },
        exog_columns: options.exog_columns.clone(),
    }
}

pub struct SearchOutcome {
    pub model: HybridModel,
    pub best_genome: Genome,
    pub history: Vec<f64>,
    pub comparison: HybridReport,
}

/// Genetic search over both MLPs and the lag variables.
pub fn search_hybrid(
    series: &[f64],
    exog: Option<&[Vec<f64>]>,
    ga: &GaConfig,
    options: &SearchOptions,
    checkpoint_dir: Option<&Path>,
) -> Result<SearchOutcome, HybridError> {
    if series.len() < 50 {
        return Err(HybridError::TooShort {
            need: 50,
            got: series.len(),
        });
    }
    let n = series.len();
    let split = (0.8 * n as f64).floor() as usize;

    // the lag genes never touch the ARIMA stage, so each fitness span
    // shares one base fit
    let fit_span = match options.fitness_span {
        FitnessSpan::TestSpan => split,
        FitnessSpan::ValidationSpan => (0.8 * split as f64).floor() as usize,
    };
    let exog_fit = exog.map(|x| x[..fit_span].to_vec());
    let base_arima = arima::fit(&series[..fit_span], &options.arima_order, exog_fit.as_deref())?;

    let eval_series = &series[..match options.fitness_span {
        FitnessSpan::TestSpan => n,
        FitnessSpan::ValidationSpan => split,
    }];

    let space = hybrid_space(options);
    let fitness = |genome: &Genome, _eval_seed: u64| -> Result<f64, String> {
        let config = decode_hybrid_config(genome, options, ga.seed);
        let model = fit_hybrid_with_arima(&config, eval_series, base_arima.clone())
            .map_err(|e| e.to_string())?;
        let horizon = eval_series.len() - fit_span;
        let exog_future = exog.map(|x| x[fit_span..eval_series.len()].to_vec());
        let pred =
            predict_hybrid(&model, horizon, exog_future.as_deref()).map_err(|e| e.to_string())?;
        Ok(stats::mae(&eval_series[fit_span..], &pred))
    };
    let outcome = evolution::run_ga(&space, &fitness, ga, &[], checkpoint_dir)?;

    // refit the winner on the full training span and compare on the test
    // span
    let config = decode_hybrid_config(&outcome.best, options, ga.seed);
    let exog_train = exog.map(|x| x[..split].to_vec());
    let final_arima = arima::fit(&series[..split], &options.arima_order, exog_train.as_deref())?;
    let model = fit_hybrid_with_arima(&config, series, final_arima)?;
    let comparison = compare_on_test(&model, series, exog)?;

    Ok(SearchOutcome {
        model,
        best_genome: outcome.best,
        history: outcome.history,
        comparison,
    })
}
