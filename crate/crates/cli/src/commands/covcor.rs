use std::path::Path;

use pvcast_core::covcor::{
    build_weights, cov_corr, estimate as covcor_estimate, evaluate_field, CovCorWeights, FlipMode,
};
use pvcast_core::datacube::load_cube;

use crate::error::CliResult;
use crate::io;
use crate::{CovcorEstimateArgs, CovcorEvaluateArgs, CovcorWeightsArgs};

pub fn weights(args: CovcorWeightsArgs, out: &Path) -> CliResult<()> {
    let cube = load_cube(&args.cube)?;
    let matrices = cov_corr(&cube)?;
    for name in &matrices.warnings {
        eprintln!("warning: column `{name}` is constant; correlations reported as 0");
    }
    let flip: Vec<String> = match &args.flip {
        // explicit names must exist; build_weights rejects unknowns
        Some(list) => list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect(),
        // the default list only applies where those columns exist
        None => pvcast_core::covcor::DEFAULT_FLIP
            .iter()
            .map(|s| s.to_string())
            .filter(|name| matrices.names.contains(name))
            .collect(),
    };
    let mode = if args.flip_correlation_only {
        FlipMode::CorrelationOnly
    } else {
        FlipMode::Both
    };
    let weights = build_weights(&matrices, &args.target, &flip, mode)?;
    io::ensure_dir(out)?;
    let path = out.join("weights.json");
    io::write_json(&path, &weights)?;
    println!(
        "wrote {} (target `{}`, {} variables, {} flipped)",
        path.display(),
        weights.target,
        weights.variable_names.len(),
        weights.flipped.len()
    );
    Ok(())
}

pub fn estimate(args: CovcorEstimateArgs, out: &Path) -> CliResult<()> {
    let cube = load_cube(&args.cube)?;
    let weights: CovCorWeights = serde_json::from_str(&std::fs::read_to_string(&args.weights)?)?;
    let field = covcor_estimate(&weights, &cube)?;
    io::ensure_dir(out)?;
    let path = out.join("estimate.csv");
    io::write_field_csv(&field, &path, "estimate")?;
    println!("wrote {} ({} rows)", path.display(), field.values.len());
    if args.heatmap {
        let points: Vec<_> = field
            .locations
            .iter()
            .zip(&field.values)
            .map(|(l, v)| (*l, *v))
            .collect();
        let png = io::write_heatmap_png(&points, &out.join("estimate.png"))?;
        println!("wrote {}", png.display());
    }
    Ok(())
}

pub fn evaluate(args: CovcorEvaluateArgs, out: &Path) -> CliResult<()> {
    let mut estimate_field = io::read_field_csv(&args.estimate)?;
    let mut reference = io::read_field_csv(&args.reference)?;
    if !args.no_rescale {
        estimate_field = estimate_field.rescaled();
        reference = reference.rescaled();
    }
    let metrics = evaluate_field(&estimate_field, &reference)?;
    io::ensure_dir(out)?;
    io::write_json(&out.join("evaluation.json"), &metrics)?;
    println!("mse {:.6}  mae {:.6}", metrics.mse, metrics.mae);
    Ok(())
}
