use std::path::Path;

use pvcast_core::interpolation::{
    empirical_semivariogram, fit_variogram, KrigingModel,
};
use pvcast_core::table::{load_table, Schema};
use serde::Serialize;

use crate::error::CliResult;
use crate::io;
use crate::KrigeArgs;

#[derive(Serialize)]
struct VariogramReport {
    scale: f64,
    exponent: f64,
    nugget: f64,
    residual: f64,
    empirical: Vec<(f64, f64)>,
}

pub fn run(args: KrigeArgs, out: &Path) -> CliResult<()> {
    let table = load_table(&args.samples, Schema::Plants)?;
    let values = &table.column("capacity_factor").unwrap().values;
    let samples: Vec<_> = table
        .locations
        .iter()
        .zip(values)
        .map(|(loc, v)| (*loc, *v))
        .collect();

    let empirical = empirical_semivariogram(&samples, args.n_bins)?;
    let fit = fit_variogram(&empirical)?;
    let model = KrigingModel::new(&samples, fit.model)?;
    let grid = io::read_grid(&args.grid)?;
    let raster = model.krige_grid(&grid)?;

    io::ensure_dir(out)?;
    let raster_path = out.join("raster.csv");
    io::write_raster_csv(&raster, &raster_path)?;
    io::write_json(
        &out.join("variogram.json"),
        &VariogramReport {
            scale: fit.model.scale,
            exponent: fit.model.exponent,
            nugget: fit.model.nugget,
            residual: fit.residual,
            empirical,
        },
    )?;
    println!(
        "wrote {} ({} points; variogram scale={:.6} exponent={:.6} nugget={:.6})",
        raster_path.display(),
        raster.points.len(),
        fit.model.scale,
        fit.model.exponent,
        fit.model.nugget
    );
    if args.heatmap {
        let points: Vec<_> = raster
            .points
            .iter()
            .map(|p| (p.location, p.prediction))
            .collect();
        let png = io::write_heatmap_png(&points, &out.join("raster.png"))?;
        println!("wrote {}", png.display());
    }
    Ok(())
}
