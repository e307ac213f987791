use std::path::Path;

use pvcast_core::datacube::{build_cube, write_cube, CubeOptions};
use pvcast_core::table::{load_table, Schema, Table};

use crate::error::CliResult;
use crate::io;
use crate::CubeBuildArgs;

pub fn build(args: CubeBuildArgs, out: &Path) -> CliResult<()> {
    let mut sources: Vec<Table> = Vec::new();
    for (path, schema) in [
        (&args.atlas, Schema::Atlas),
        (&args.stations, Schema::Stations),
        (&args.pvgis, Schema::Pvgis),
        (&args.plants, Schema::Plants),
    ] {
        if let Some(path) = path {
            sources.push(load_table(path, schema)?);
        }
    }
    if sources.is_empty() {
        return Err(crate::error::CliError::Usage(
            "at least one of --atlas/--stations/--pvgis/--plants is required".into(),
        ));
    }
    let grid = io::read_grid(&args.grid)?;
    let cube = build_cube(
        &sources,
        &grid,
        CubeOptions {
            k: args.k,
            include_pvgis: args.include_pvgis,
        },
    )?;
    for name in &cube.constant_columns {
        eprintln!("warning: column `{name}` is constant; normalized to zeros");
    }
    io::ensure_dir(out)?;
    let (csv_path, meta_path) = write_cube(&cube, out)?;
    println!(
        "wrote {} ({} rows, {} columns) and {}",
        csv_path.display(),
        cube.n_rows(),
        cube.table.columns().len(),
        meta_path.display()
    );
    Ok(())
}
