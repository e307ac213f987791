//! Deterministic synthetic fixtures: a linear-map cube (atlas + stations
//! + plants + a PVGIS-style reference over a lat/lon lattice), an AR(1)
//! series contaminated with a sinusoid, a gross-outlier line, and a
//! small sample field for kriging. Everything derives from an explicit
//! seed, so repeated generation is byte-identical.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::covcor::EstimateField;
use crate::geo::Location;
use crate::table::{pvgis_columns, Column, SourceTag, Table};

/// AR(1) with Gaussian innovations, burned in for 50 steps.
pub fn ar1_series(n: usize, phi: f64, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut value = 0.0;
    let mut out = Vec::with_capacity(n);
    for i in 0..n + 50 {
        let noise: f64 = rng.sample(StandardNormal);
        value = phi * value + sigma * noise;
        if i >= 50 {
            out.push(value);
        }
    }
    out
}

/// AR(1) plus `amplitude·sin(angular_freq·t)`: the nonlinear-residual
/// forecasting fixture.
pub fn ar_sin_series(
    n: usize,
    phi: f64,
    sigma: f64,
    amplitude: f64,
    angular_freq: f64,
    seed: u64,
) -> Vec<f64> {
    ar1_series(n, phi, sigma, seed)
        .into_iter()
        .enumerate()
        .map(|(t, v)| v + amplitude * (angular_freq * t as f64).sin())
        .collect()
}

/// A line with a block of gross outliers: `frac_outliers` of the points
/// sit `offset` above the line at the right edge.
pub fn outlier_line(
    n: usize,
    slope: f64,
    intercept: f64,
    offset: f64,
    frac_outliers: f64,
    seed: u64,
) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_out = ((n as f64 * frac_outliers) as usize).min(n);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let x = i as f64 * 10.0 / n as f64;
        let noise: f64 = rng.sample(StandardNormal);
        let mut y = slope * x + intercept + 0.01 * noise;
        if i >= n - n_out {
            y += offset;
        }
        xs.push(x);
        ys.push(y);
    }
    (xs, ys)
}

/// Smooth sample field for kriging exactness checks.
pub fn variogram_field(n_samples: usize, seed: u64) -> Vec<(Location, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_samples)
        .map(|_| {
            let lat = -10.0 + 2.5 * rng.random::<f64>();
            let lon = -38.0 + 2.5 * rng.random::<f64>();
            let value = 0.2
                + 0.1 * (1.3 * lat).sin() * (0.9 * lon).cos()
                + 0.05 * (0.7 * (lat + lon)).sin();
            (Location::new(lat, lon).unwrap(), value)
        })
        .collect()
}

/// The linear-map spatial fixture: every source file the cube pipeline
/// ingests, plus the reference field used by the covariance/correlation
/// evaluation.
#[derive(Debug, Clone)]
pub struct LinearMapFixture {
    pub grid: Vec<Location>,
    pub atlas: Table,
    pub stations: Table,
    pub pvgis: Table,
    pub plants: Table,
    /// PVGIS-style reference: a blend of the drivers, at grid locations.
    pub reference: EstimateField,
}

const LAT0: f64 = -10.0;
const LON0: f64 = -38.0;
const SPAN: f64 = 2.5;

// smooth latent drivers on the unit square
fn base_field(u: f64, v: f64) -> f64 {
    0.5 + 0.35 * (2.1 * u + 0.7).sin() * (1.7 * v + 0.3).cos()
}

fn second_field(u: f64, v: f64) -> f64 {
    0.5 + 0.4 * (1.3 * u - 0.4).cos() * (2.3 * v + 1.1).sin()
}

fn unit_coords(loc: &Location) -> (f64, f64) {
    ((loc.lat - LAT0) / SPAN, (loc.lon - LON0) / SPAN)
}

fn gauss(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    let n: f64 = rng.sample(StandardNormal);
    scale * n
}

pub fn linear_map_fixture(grid_points: usize, seed: u64) -> LinearMapFixture {
    let side = (grid_points as f64).sqrt().ceil() as usize;
    let mut grid = Vec::with_capacity(grid_points);
    'outer: for i in 0..side {
        for j in 0..side {
            if grid.len() == grid_points {
                break 'outer;
            }
            let lat = LAT0 + SPAN * i as f64 / (side.max(2) - 1) as f64;
            let lon = LON0 + SPAN * j as f64 / (side.max(2) - 1) as f64;
            grid.push(Location::new(lat, lon).unwrap());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // atlas columns at grid locations
    let mut ghi = Vec::new();
    let mut tilted = Vec::new();
    let mut dni = Vec::new();
    let mut diffuse = Vec::new();
    let mut par = Vec::new();
    for loc in &grid {
        let (u, v) = unit_coords(loc);
        let b = base_field(u, v);
        let sf = second_field(u, v);
        // global components carry a share of the secondary driver that
        // the direct beam alone misses
        let g = 5.2 + 1.1 * b + 0.55 * sf + gauss(&mut rng, 0.02);
        ghi.push(g);
        tilted.push(1.06 * g + gauss(&mut rng, 0.02));
        dni.push(5.6 + 1.8 * b + gauss(&mut rng, 0.02));
        diffuse.push(2.4 - 0.5 * b + 0.45 * sf + gauss(&mut rng, 0.02));
        par.push(0.44 * g + gauss(&mut rng, 0.01));
    }
    let atlas = Table::new(
        SourceTag::Atlas,
        grid.clone(),
        vec![
            Column { name: "global_horizontal".into(), values: ghi.clone() },
            Column { name: "tilted".into(), values: tilted },
            Column { name: "direct_normal".into(), values: dni.clone() },
            Column { name: "diffuse".into(), values: diffuse },
            Column { name: "par".into(), values: par },
        ],
    )
    .expect("atlas fixture");

    // stations sit just off the grid nodes, densely enough that the
    // nearest-neighbor join does not alias the smooth fields
    let station_locs: Vec<Location> = grid
        .iter()
        .map(|loc| {
            let cell = SPAN / (side.max(2) - 1) as f64;
            let lat = (loc.lat + 0.15 * cell * (rng.random::<f64>() - 0.5)).clamp(-90.0, 90.0);
            let lon = (loc.lon + 0.15 * cell * (rng.random::<f64>() - 0.5)).clamp(-180.0, 180.0);
            Location::with_alt(lat, lon, Some(300.0 + 400.0 * rng.random::<f64>())).unwrap()
        })
        .collect();
    let mut station_cols: Vec<Column> = crate::table::STATION_COLUMNS
        .iter()
        .map(|&name| Column {
            name: name.into(),
            values: Vec::with_capacity(station_locs.len()),
        })
        .collect();
    for loc in &station_locs {
        let (u, v) = unit_coords(loc);
        let b = base_field(u, v);
        let s = second_field(u, v);
        let jitter = |rng: &mut ChaCha8Rng| gauss(rng, 0.02);
        let values = [
            16.0 + 5.0 * b + jitter(&mut rng),             // total_solar_irradiance
            90.0 - 55.0 * b + 8.0 * s + jitter(&mut rng),  // days_with_precipitation
            1010.0 + 4.0 * s + jitter(&mut rng),           // atm_pressure
            27.0 + 6.0 * s - 2.0 * b + jitter(&mut rng),   // avg_max_temp
            82.0 - 30.0 * b + jitter(&mut rng),            // avg_rel_humidity
            2.5 + 2.0 * s + jitter(&mut rng),              // avg_wind_speed
            0.75 - 0.4 * b + jitter(&mut rng),             // avg_cloudiness
            1400.0 - 800.0 * b + jitter(&mut rng),         // total_precipitation
            24.0 + 3.0 * s + jitter(&mut rng),             // avg_comp_temp
            12.0 + 6.0 * b + jitter(&mut rng),             // avg_visibility
            18.0 + 2.0 * s - 1.0 * b + jitter(&mut rng),   // avg_min_temp
            110.0 + 60.0 * b + jitter(&mut rng),           // evaporation
        ];
        for (col, value) in station_cols.iter_mut().zip(values) {
            col.values.push(value);
        }
    }
    let stations =
        Table::new(SourceTag::Stations, station_locs, station_cols).expect("stations fixture");

    // plants: capacity factor is a linear map of the drivers
    let n_plants = 20.min(grid_points.max(4));
    let plant_locs: Vec<Location> = (0..n_plants)
        .map(|_| {
            let lat = LAT0 + SPAN * rng.random::<f64>();
            let lon = LON0 + SPAN * rng.random::<f64>();
            Location::new(lat, lon).unwrap()
        })
        .collect();
    let capacity: Vec<f64> = plant_locs
        .iter()
        .map(|loc| {
            let (u, v) = unit_coords(loc);
            let b = base_field(u, v);
            let s = second_field(u, v);
            (0.16 + 0.14 * b + 0.03 * s + gauss(&mut rng, 0.002)).clamp(0.0, 1.0)
        })
        .collect();
    let plants = Table::new(
        SourceTag::Plants,
        plant_locs,
        vec![Column {
            name: "capacity_factor".into(),
            values: capacity,
        }],
    )
    .expect("plants fixture");

    // PVGIS monthly means: seasonal profile scaled by a driver blend;
    // the annual mean of this field is the evaluation reference
    let mut pvgis_cols: Vec<Column> = pvgis_columns()
        .into_iter()
        .map(|name| Column {
            name,
            values: Vec::with_capacity(grid_points),
        })
        .collect();
    let mut reference_values = Vec::with_capacity(grid_points);
    for loc in &grid {
        let (u, v) = unit_coords(loc);
        let b = base_field(u, v);
        let s = second_field(u, v);
        let blend = 0.55 * b + 0.3 * s + gauss(&mut rng, 0.003);
        reference_values.push(blend);
        for m in 0..12 {
            let season = 1.0 + 0.18 * ((m as f64 + 1.0) / 12.0 * std::f64::consts::TAU).cos();
            let em = 120.0 * blend * season;
            pvgis_cols[m].values.push(em);
            pvgis_cols[m + 12].values.push(0.05 * em);
        }
    }
    let pvgis = Table::new(SourceTag::Pvgis, grid.clone(), pvgis_cols).expect("pvgis fixture");
    let reference = EstimateField {
        locations: grid.clone(),
        values: reference_values,
    };

    LinearMapFixture {
        grid,
        atlas,
        stations,
        pvgis,
        plants,
        reference,
    }
}
