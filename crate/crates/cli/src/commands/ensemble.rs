use std::path::Path;

use pvcast_core::covcor::EstimateField;
use pvcast_core::datacube::{load_cube, DataCube};
use pvcast_core::ensemble::{optimize_committee, vote_predict, FittedCommittee};
use pvcast_core::evolution::GaConfig;
use pvcast_core::regressors::RegressorKind;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io;
use crate::{EnsembleOptimizeArgs, EnsemblePredictArgs};

/// The stored model: the fitted committee plus the exact feature layout
/// it was trained on.
#[derive(Serialize, Deserialize)]
struct StoredCommittee {
    feature_names: Vec<String>,
    model: FittedCommittee,
}

/// Features are every cube column except the plant target.
fn feature_names(cube: &DataCube) -> Vec<String> {
    cube.column_names()
        .into_iter()
        .filter(|n| *n != "capacity_factor")
        .map(str::to_string)
        .collect()
}

fn feature_matrix(cube: &DataCube, names: &[String]) -> CliResult<Vec<Vec<f64>>> {
    let mut columns = Vec::with_capacity(names.len());
    for name in names {
        let col = cube.table.column(name).ok_or_else(|| {
            CliError::Validation(format!("MissingVariable: cube lacks feature `{name}`"))
        })?;
        columns.push(&col.values);
    }
    Ok((0..cube.n_rows())
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect())
}

fn check_target_alignment(cube: &DataCube, target: &EstimateField) -> CliResult<()> {
    if target.values.len() != cube.n_rows() {
        return Err(CliError::Validation(format!(
            "RowMismatch: target has {} rows, cube {}",
            target.values.len(),
            cube.n_rows()
        )));
    }
    for (a, b) in cube.table.locations.iter().zip(&target.locations) {
        if (a.lat - b.lat).abs() > 1e-9 || (a.lon - b.lon).abs() > 1e-9 {
            return Err(CliError::Validation(
                "RowMismatch: target rows are not aligned with the cube".into(),
            ));
        }
    }
    Ok(())
}

pub fn optimize(args: EnsembleOptimizeArgs, seed: u64, out: &Path) -> CliResult<()> {
    let cube = load_cube(&args.cube)?;
    let target = io::read_field_csv(&args.target)?;
    check_target_alignment(&cube, &target)?;

    let pool: Vec<RegressorKind> = match &args.pool {
        None => RegressorKind::ALL.to_vec(),
        Some(list) => list
            .split(',')
            .map(|name| {
                RegressorKind::parse(name.trim()).ok_or_else(|| {
                    CliError::Usage(format!("unknown regressor kind `{name}` in --pool"))
                })
            })
            .collect::<CliResult<_>>()?,
    };

    let names = feature_names(&cube);
    let x = feature_matrix(&cube, &names)?;
    let config = GaConfig {
        population_size: args.pop,
        generations: args.gens,
        crossover_rate: args.crossover_rate,
        mutation_rate: args.mutation_rate,
        elite_count: args.elites,
        seed,
    };
    io::ensure_dir(out)?;
    let checkpoint_dir = args.checkpoints.then(|| out.join("checkpoints"));
    let outcome = optimize_committee(
        &pool,
        &x,
        &target.values,
        &config,
        args.folds,
        checkpoint_dir.as_deref(),
    )?;

    io::write_json(
        &out.join("committee.json"),
        &StoredCommittee {
            feature_names: names,
            model: outcome.best,
        },
    )?;
    io::write_json(&out.join("ensemble_report.json"), &outcome.report)?;
    let table = outcome.report.render_table();
    io::write_text(&out.join("ensemble_report.txt"), &table)?;
    print!("{table}");
    println!(
        "wrote {} and reports",
        out.join("committee.json").display()
    );
    Ok(())
}

pub fn predict(args: EnsemblePredictArgs, out: &Path) -> CliResult<()> {
    let stored: StoredCommittee =
        serde_json::from_str(&std::fs::read_to_string(&args.model)?)?;
    let cube = load_cube(&args.cube)?;
    let x = feature_matrix(&cube, &stored.feature_names)?;
    let predictions = vote_predict(&stored.model, &x)?;
    io::ensure_dir(out)?;
    let field = EstimateField {
        locations: cube.table.locations.clone(),
        values: predictions,
    };
    let path = out.join("predictions.csv");
    io::write_field_csv(&field, &path, "prediction")?;
    println!("wrote {}", path.display());
    Ok(())
}
