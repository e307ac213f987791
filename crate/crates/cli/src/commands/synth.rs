use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use pvcast_core::synth;

use crate::error::CliResult;
use crate::io;
use crate::{SynthArgs, SynthKind};

// fixture constants shared with the acceptance checks: AR(1) φ=0.7,
// σ=0.12, sinusoid 0.35·sin(0.3·t)
pub const AR_SIN_PHI: f64 = 0.7;
pub const AR_SIN_SIGMA: f64 = 0.12;
pub const AR_SIN_AMPLITUDE: f64 = 0.35;
pub const AR_SIN_FREQ: f64 = 0.3;

pub fn run(args: SynthArgs, seed: u64, out: &Path) -> CliResult<()> {
    io::ensure_dir(out)?;
    let mut written = Vec::new();
    match args.kind {
        SynthKind::LinearMap => {
            let fixture = synth::linear_map_fixture(args.n, seed);
            io::write_table_csv(&fixture.atlas, &out.join("atlas.csv"), false)?;
            io::write_table_csv(&fixture.stations, &out.join("stations.csv"), true)?;
            io::write_table_csv(&fixture.pvgis, &out.join("pvgis.csv"), false)?;
            io::write_table_csv(&fixture.plants, &out.join("plants.csv"), false)?;
            let mut grid_csv = String::from("lat,lon\n");
            for loc in &fixture.grid {
                writeln!(grid_csv, "{},{}", loc.lat, loc.lon).unwrap();
            }
            io::write_text(&out.join("grid.csv"), &grid_csv)?;
            io::write_field_csv(&fixture.reference, &out.join("reference.csv"), "reference")?;
            written.extend([
                "atlas.csv",
                "stations.csv",
                "pvgis.csv",
                "plants.csv",
                "grid.csv",
                "reference.csv",
            ]);
        }
        SynthKind::ArSin => {
            let series = synth::ar_sin_series(
                args.n,
                AR_SIN_PHI,
                AR_SIN_SIGMA,
                AR_SIN_AMPLITUDE,
                AR_SIN_FREQ,
                seed,
            );
            let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
            let mut csv = String::from("date,generation\n");
            for (t, v) in series.iter().enumerate() {
                let date = start + chrono::Duration::days(t as i64);
                writeln!(csv, "{},{}", date.format("%Y-%m-%d"), v).unwrap();
            }
            io::write_text(&out.join("series.csv"), &csv)?;
            written.push("series.csv");
        }
        SynthKind::OutlierLine => {
            let (xs, ys) = synth::outlier_line(args.n, 3.0, 1.0, 40.0, 0.3, seed);
            let mut csv = String::from("x,y\n");
            for (x, y) in xs.iter().zip(&ys) {
                writeln!(csv, "{x},{y}").unwrap();
            }
            io::write_text(&out.join("points.csv"), &csv)?;
            written.push("points.csv");
        }
        SynthKind::VariogramField => {
            let field = synth::variogram_field(args.n, seed);
            let mut csv = String::from("lat,lon,capacity_factor\n");
            for (loc, v) in &field {
                writeln!(csv, "{},{},{}", loc.lat, loc.lon, v).unwrap();
            }
            io::write_text(&out.join("samples.csv"), &csv)?;
            written.push("samples.csv");
        }
    }
    println!(
        "wrote {} in {}",
        written.join(", "),
        out.display()
    );
    Ok(())
}
