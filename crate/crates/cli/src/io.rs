//! File formats shared by the subcommands: lat/lon grids, rasters,
//! estimate fields, schema tables, and the fixed-ramp PNG heatmap.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use pvcast_core::covcor::EstimateField;
use pvcast_core::geo::Location;
use pvcast_core::interpolation::Raster;
use pvcast_core::table::Table;

use crate::error::{CliError, CliResult};

/// Read a `lat,lon` CSV into locations.
pub fn read_grid(path: &Path) -> CliResult<Vec<Location>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("lat") || headers.get(1) != Some("lon") {
        return Err(CliError::Validation(format!(
            "MissingColumn: grid file {} must start with lat,lon",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |raw: &str, col: &str| -> CliResult<f64> {
            raw.parse::<f64>().map_err(|_| {
                CliError::Validation(format!("NonNumericCell: grid row {}, column {col}", i + 1))
            })
        };
        let lat = parse(&record[0], "lat")?;
        let lon = parse(&record[1], "lon")?;
        out.push(Location::new(lat, lon).map_err(|e| CliError::Validation(e.to_string()))?);
    }
    if out.is_empty() {
        return Err(CliError::Validation("EmptyTable: grid file has no rows".into()));
    }
    Ok(out)
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

pub fn write_text(path: &Path, content: &str) -> CliResult<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(content.as_bytes())?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_text(path, &serde_json::to_string_pretty(value)?)
}

/// Write a schema table as CSV (`lat,lon[,alt],columns...`).
pub fn write_table_csv(table: &Table, path: &Path, with_alt: bool) -> CliResult<()> {
    let mut out = String::from("lat,lon");
    if with_alt {
        out.push_str(",alt");
    }
    for name in table.column_names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..table.n_rows() {
        let loc = &table.locations[i];
        write!(out, "{},{}", loc.lat, loc.lon).unwrap();
        if with_alt {
            write!(out, ",{}", loc.alt.unwrap_or(0.0)).unwrap();
        }
        for col in table.columns() {
            write!(out, ",{}", col.values[i]).unwrap();
        }
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn write_raster_csv(raster: &Raster, path: &Path) -> CliResult<()> {
    let mut out = String::from("lat,lon,prediction,variance\n");
    for p in &raster.points {
        writeln!(
            out,
            "{},{},{},{}",
            p.location.lat, p.location.lon, p.prediction, p.variance
        )
        .unwrap();
    }
    write_text(path, &out)
}

/// Read `lat,lon,<value>` (third column name free) into a field.
pub fn read_field_csv(path: &Path) -> CliResult<EstimateField> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("lat") || headers.get(1) != Some("lon") || headers.len() < 3 {
        return Err(CliError::Validation(format!(
            "MissingColumn: field file {} must be lat,lon,<value>",
            path.display()
        )));
    }
    let mut locations = Vec::new();
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |raw: &str, col: usize| -> CliResult<f64> {
            raw.parse::<f64>().map_err(|_| {
                CliError::Validation(format!(
                    "NonNumericCell: field row {}, column {}",
                    i + 1,
                    headers.get(col).unwrap_or("?")
                ))
            })
        };
        locations.push(
            Location::new(parse(&record[0], 0)?, parse(&record[1], 1)?)
                .map_err(|e| CliError::Validation(e.to_string()))?,
        );
        values.push(parse(&record[2], 2)?);
    }
    if values.is_empty() {
        return Err(CliError::Validation("EmptyTable: field file has no rows".into()));
    }
    Ok(EstimateField { locations, values })
}

pub fn write_field_csv(field: &EstimateField, path: &Path, value_name: &str) -> CliResult<()> {
    let mut out = format!("lat,lon,{value_name}\n");
    for (loc, v) in field.locations.iter().zip(&field.values) {
        writeln!(out, "{},{},{}", loc.lat, loc.lon, v).unwrap();
    }
    write_text(path, &out)
}

// 16-stop blue→red ramp; values snap to the nearest stop (no
// interpolation)
const RAMP: [[u8; 3]; 16] = [
    [13, 8, 135],
    [62, 4, 156],
    [99, 0, 167],
    [132, 5, 167],
    [158, 23, 158],
    [182, 48, 139],
    [202, 71, 120],
    [219, 92, 104],
    [233, 114, 87],
    [243, 138, 70],
    [250, 163, 54],
    [253, 189, 39],
    [251, 217, 28],
    [245, 240, 38],
    [250, 250, 110],
    [255, 255, 180],
];

/// Render a regular lat/lon lattice of values as a PNG, row-major with
/// the top-left pixel at (max lat, min lon). Errors when the points do
/// not form a full lattice.
pub fn write_heatmap_png(points: &[(Location, f64)], path: &Path) -> CliResult<PathBuf> {
    let mut lats: Vec<f64> = points.iter().map(|(l, _)| l.lat).collect();
    let mut lons: Vec<f64> = points.iter().map(|(l, _)| l.lon).collect();
    lats.sort_by(|a, b| b.partial_cmp(a).unwrap());
    lats.dedup();
    lons.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lons.dedup();
    if lats.len() * lons.len() != points.len() {
        return Err(CliError::Validation(format!(
            "NotALattice: {} points cannot fill a {}×{} lattice",
            points.len(),
            lats.len(),
            lons.len()
        )));
    }

    let min = points.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    let max = points
        .iter()
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let span = if max > min { max - min } else { 1.0 };

    let mut img = image::RgbImage::new(lons.len() as u32, lats.len() as u32);
    for (loc, v) in points {
        let row = lats.iter().position(|&a| a == loc.lat).unwrap();
        let col = lons.iter().position(|&o| o == loc.lon).unwrap();
        let t = ((v - min) / span).clamp(0.0, 1.0);
        let stop = ((t * (RAMP.len() - 1) as f64).round() as usize).min(RAMP.len() - 1);
        img.put_pixel(col as u32, row as u32, image::Rgb(RAMP[stop]));
    }
    img.save(path)
        .map_err(|e| CliError::Runtime(format!("Png: {e}")))?;
    Ok(path.to_path_buf())
}
