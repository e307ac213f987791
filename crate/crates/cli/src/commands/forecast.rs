use std::path::Path;

use chrono::NaiveDate;
use pvcast_core::arima::{grid_search_order, load_series_csv, ArimaOrder, SeasonalOrder};
use pvcast_core::evolution::GaConfig;
use pvcast_core::hybrid::{predict_hybrid, search_hybrid, FitnessSpan, HybridModel, SearchOptions};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io;
use crate::{ForecastFitArgs, ForecastPredictArgs};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct ScaleParams {
    min: f64,
    max: f64,
}

impl ScaleParams {
    fn of(values: &[f64]) -> ScaleParams {
        ScaleParams {
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    fn scale(&self, v: f64) -> f64 {
        if self.max > self.min {
            (v - self.min) / (self.max - self.min)
        } else {
            0.0
        }
    }

    fn unscale(&self, v: f64) -> f64 {
        self.min + v * (self.max - self.min)
    }
}

/// Everything `forecast predict` needs: the fitted hybrid, the unit
/// scaling, the full scaled exogenous table and the series dates.
#[derive(Serialize, Deserialize)]
struct StoredForecastModel {
    model: HybridModel,
    series_scale: ScaleParams,
    exog_names: Vec<String>,
    exog_scales: Vec<ScaleParams>,
    exog_scaled: Vec<Vec<f64>>,
    dates: Vec<String>,
}

fn parse_order(order: &str, seasonal: Option<&str>) -> CliResult<ArimaOrder> {
    let parts: Vec<usize> = order
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--order `{order}` is not p,d,q")))?;
    if parts.len() != 3 {
        return Err(CliError::Usage(format!("--order `{order}` is not p,d,q")));
    }
    match seasonal {
        None => Ok(ArimaOrder::new(parts[0], parts[1], parts[2])),
        Some(s) => {
            let sp: Vec<usize> = s
                .split(',')
                .map(|p| p.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Usage(format!("--seasonal `{s}` is not P,D,Q,s")))?;
            if sp.len() != 4 {
                return Err(CliError::Usage(format!("--seasonal `{s}` is not P,D,Q,s")));
            }
            Ok(ArimaOrder::with_seasonal(
                parts[0],
                parts[1],
                parts[2],
                SeasonalOrder {
                    p: sp[0],
                    d: sp[1],
                    q: sp[2],
                    s: sp[3],
                },
            )?)
        }
    }
}

pub fn fit(args: ForecastFitArgs, seed: u64, out: &Path) -> CliResult<()> {
    let data = load_series_csv(&args.series)?;
    let exog_names: Vec<String> = match &args.exog {
        None => Vec::new(),
        Some(list) => list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect(),
    };
    let exog_raw = data.exog_subset(&exog_names)?;

    let series_scale = ScaleParams::of(&data.values);
    let scaled: Vec<f64> = data.values.iter().map(|&v| series_scale.scale(v)).collect();
    let exog_scales: Vec<ScaleParams> = (0..exog_names.len())
        .map(|j| ScaleParams::of(&exog_raw.iter().map(|r| r[j]).collect::<Vec<f64>>()))
        .collect();
    let exog_scaled: Vec<Vec<f64>> = exog_raw
        .iter()
        .map(|row| {
            row.iter()
                .zip(&exog_scales)
                .map(|(v, s)| s.scale(*v))
                .collect()
        })
        .collect();
    let exog_opt = (!exog_names.is_empty()).then_some(exog_scaled.as_slice());

    let mut order = parse_order(&args.order, args.seasonal.as_deref())?;
    if args.auto_order {
        let split = (0.8 * scaled.len() as f64).floor() as usize;
        let exog_train = exog_opt.map(|x| x[..split].to_vec());
        let (chosen, score) = grid_search_order(&scaled[..split], exog_train.as_deref(), &order)?;
        println!(
            "auto-order: ({},{},{}) css/n {:.6}",
            chosen.p, chosen.d, chosen.q, score
        );
        order = chosen;
    }

    let options = SearchOptions {
        arima_order: order,
        exog_columns: exog_names.clone(),
        fitness_span: if args.validation_fitness {
            FitnessSpan::ValidationSpan
        } else {
            FitnessSpan::TestSpan
        },
        mlp_max_epochs: args.mlp_epochs,
        lag_lo: 1,
        lag_hi: args.lag_max,
        hidden_lo: 1,
        hidden_hi: args.hidden_max,
    };
    let ga = GaConfig {
        population_size: args.pop,
        generations: args.gens,
        crossover_rate: 0.8,
        mutation_rate: 0.2,
        elite_count: 1,
        seed,
    };
    io::ensure_dir(out)?;
    let checkpoint_dir = args.checkpoints.then(|| out.join("checkpoints"));
    let outcome = search_hybrid(&scaled, exog_opt, &ga, &options, checkpoint_dir.as_deref())?;

    let stored = StoredForecastModel {
        model: outcome.model,
        series_scale,
        exog_names,
        exog_scales,
        exog_scaled,
        dates: data.dates,
    };
    io::write_json(&out.join("hybrid_model.json"), &stored)?;

    #[derive(Serialize)]
    struct Report<'a> {
        comparison: &'a pvcast_core::hybrid::HybridReport,
        history: &'a [f64],
        best_genome: &'a pvcast_core::evolution::Genome,
    }
    io::write_json(
        &out.join("forecast_report.json"),
        &Report {
            comparison: &outcome.comparison,
            history: &outcome.history,
            best_genome: &outcome.best_genome,
        },
    )?;
    let table = outcome.comparison.render_table();
    io::write_text(&out.join("forecast_report.txt"), &table)?;
    print!("{table}");
    println!("wrote {}", out.join("hybrid_model.json").display());
    Ok(())
}

pub fn predict(args: ForecastPredictArgs, out: &Path) -> CliResult<()> {
    if args.horizon == 0 {
        return Err(CliError::Usage("--horizon must be >= 1".into()));
    }
    let stored: StoredForecastModel =
        serde_json::from_str(&std::fs::read_to_string(&args.model)?)?;
    let split = stored.model.split_index;

    let exog_future = if stored.exog_names.is_empty() {
        None
    } else {
        // test-span rows from the stored table, then user-provided rows
        let mut rows: Vec<Vec<f64>> = stored.exog_scaled[split..].to_vec();
        if rows.len() < args.horizon {
            let Some(path) = &args.exog_future else {
                return Err(CliError::Validation(format!(
                    "MissingExog: horizon {} exceeds the {} stored rows; pass --exog-future",
                    args.horizon,
                    rows.len()
                )));
            };
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(true)
                .trim(csv::Trim::All)
                .from_path(path)?;
            let headers: Vec<String> =
                reader.headers()?.iter().map(|h| h.to_string()).collect();
            let idx: Vec<usize> = stored
                .exog_names
                .iter()
                .map(|n| {
                    headers.iter().position(|h| h == n).ok_or_else(|| {
                        CliError::Validation(format!("MissingColumn: exog-future lacks `{n}`"))
                    })
                })
                .collect::<CliResult<_>>()?;
            for (i, record) in reader.records().enumerate() {
                let record = record?;
                let mut row = Vec::with_capacity(idx.len());
                for (&col, scale) in idx.iter().zip(&stored.exog_scales) {
                    let v: f64 = record[col].parse().map_err(|_| {
                        CliError::Validation(format!(
                            "NonNumericCell: exog-future row {}, column {}",
                            i + 1,
                            headers[col]
                        ))
                    })?;
                    row.push(scale.scale(v));
                }
                rows.push(row);
            }
            if rows.len() < args.horizon {
                return Err(CliError::Validation(format!(
                    "MissingExog: need {} exog rows, have {}",
                    args.horizon,
                    rows.len()
                )));
            }
        }
        Some(rows)
    };

    let predictions = predict_hybrid(&stored.model, args.horizon, exog_future.as_deref())?;

    let last_known = stored
        .dates
        .last()
        .cloned()
        .unwrap_or_else(|| "1970-01-01".into());
    let date_for = |idx: usize| -> String {
        if idx < stored.dates.len() {
            stored.dates[idx].clone()
        } else {
            match NaiveDate::parse_from_str(&last_known, "%Y-%m-%d") {
                Ok(date) => {
                    let days = (idx + 1 - stored.dates.len()) as i64;
                    (date + chrono::Duration::days(days)).format("%Y-%m-%d").to_string()
                }
                Err(_) => format!("t+{}", idx + 1 - stored.dates.len()),
            }
        }
    };

    io::ensure_dir(out)?;
    let mut csv_out = String::from("date,prediction\n");
    for (h, value) in predictions.iter().enumerate() {
        let unscaled = stored.series_scale.unscale(*value);
        csv_out.push_str(&format!("{},{}\n", date_for(split + h), unscaled));
    }
    let path = out.join("predictions.csv");
    io::write_text(&path, &csv_out)?;
    println!("wrote {} ({} rows)", path.display(), predictions.len());
    Ok(())
}
