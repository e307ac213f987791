//! Joining heterogeneous sources into a normalized, location-indexed cube.
//!
//! Sources are matched to a query grid by k-nearest-neighbor mean under
//! haversine distance, then every column is min-max normalized to [0, 1].
//! The cube file format is a CSV (`lat,lon` then data columns) plus a JSON
//! sidecar holding the normalization parameters and per-column provenance.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geo::Location;
use crate::table::{pvgis_columns, Column, CubeError, SourceTag, Table};

pub use crate::table::CubeError as Error;

/// Raw-unit min/max of one column, kept so normalization stays invertible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub min: f64,
    pub max: f64,
}

/// Per-column normalization parameters.
pub type NormalizationParams = BTreeMap<String, ColumnScale>;

/// Result of [`normalize`]: the rescaled table, the raw-unit parameters and
/// the names of constant columns (mapped to all-zeros rather than erroring).
#[derive(Debug, Clone)]
pub struct Normalized {
    pub table: Table,
    pub params: NormalizationParams,
    pub constant_columns: Vec<String>,
}

/// Min-max normalize every data column to [0, 1].
pub fn normalize(table: &Table) -> Result<Normalized, CubeError> {
    if table.n_rows() == 0 {
        return Err(CubeError::EmptyTable);
    }
    let mut params = NormalizationParams::new();
    let mut constant = Vec::new();
    let mut columns = Vec::with_capacity(table.columns().len());
    for col in table.columns() {
        let min = col.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = col.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        params.insert(col.name.clone(), ColumnScale { min, max });
        let values = if max > min {
            col.values.iter().map(|v| (v - min) / (max - min)).collect()
        } else {
            constant.push(col.name.clone());
            vec![0.0; col.values.len()]
        };
        columns.push(Column {
            name: col.name.clone(),
            values,
        });
    }
    Ok(Normalized {
        table: Table::new(table.source_tag, table.locations.clone(), columns)?,
        params,
        constant_columns: constant,
    })
}

/// Invert [`normalize`] for one value of a non-constant column.
pub fn denormalize(scale: &ColumnScale, v: f64) -> f64 {
    scale.min + v * (scale.max - scale.min)
}

/// Attach to each `base` row the mean of the `k` nearest `other` rows.
///
/// Distance ties break deterministically by (lat, lon, input order)
/// ascending, so the join is reproducible for any input permutation of
/// equidistant rows.
pub fn knn_join(base: &Table, other: &Table, k: usize) -> Result<Table, CubeError> {
    if base.n_rows() == 0 || other.n_rows() == 0 {
        return Err(CubeError::EmptyTable);
    }
    if k == 0 || k > other.n_rows() {
        return Err(CubeError::KNotSatisfiable {
            k,
            rows: other.n_rows(),
        });
    }
    for col in other.columns() {
        if base.column(&col.name).is_some() {
            return Err(CubeError::UnknownColumn(format!(
                "column `{}` exists on both sides of the join",
                col.name
            )));
        }
    }

    let neighbor_means = crate::exec::map_slice(&base.locations, |loc| {
        let mut order: Vec<(f64, usize)> = other
            .locations
            .iter()
            .enumerate()
            .map(|(j, p)| (loc.haversine_km(p), j))
            .collect();
        order.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then_with(|| {
                    let (pa, pb) = (&other.locations[a.1], &other.locations[b.1]);
                    pa.lat
                        .partial_cmp(&pb.lat)
                        .unwrap()
                        .then(pa.lon.partial_cmp(&pb.lon).unwrap())
                })
                .then(a.1.cmp(&b.1))
        });
        let mut means = vec![0.0; other.columns().len()];
        for &(_, j) in order.iter().take(k) {
            for (m, col) in means.iter_mut().zip(other.columns()) {
                *m += col.values[j];
            }
        }
        for m in &mut means {
            *m /= k as f64;
        }
        means
    });

    let mut columns: Vec<Column> = base.columns().to_vec();
    for (c, col) in other.columns().iter().enumerate() {
        columns.push(Column {
            name: col.name.clone(),
            values: neighbor_means.iter().map(|row| row[c]).collect(),
        });
    }
    Table::new(base.source_tag, base.locations.clone(), columns)
}

/// Options for [`build_cube`].
#[derive(Debug, Clone, Copy)]
pub struct CubeOptions {
    /// Neighbors averaged per query location.
    pub k: usize,
    /// Fold the PVGIS monthly means into a `pvgis_monthly_mean` cube column.
    /// Off by default: the PVGIS fields serve as evaluation references.
    pub include_pvgis: bool,
}

impl Default for CubeOptions {
    fn default() -> Self {
        CubeOptions {
            k: 3,
            include_pvgis: false,
        }
    }
}

/// The joined, normalized, location-indexed data table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataCube {
    pub table: Table,
    pub norm: NormalizationParams,
    pub provenance: BTreeMap<String, SourceTag>,
    pub constant_columns: Vec<String>,
}

impl DataCube {
    pub fn n_rows(&self) -> usize {
        self.table.n_rows()
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.table.column_names()
    }
}

fn catalog_for(tag: SourceTag) -> Vec<String> {
    match tag {
        SourceTag::Atlas => crate::table::ATLAS_COLUMNS
            .iter()
            .map(|s| s.to_string())
            .collect(),
        SourceTag::Stations => crate::table::STATION_COLUMNS
            .iter()
            .map(|s| s.to_string())
            .collect(),
        SourceTag::Pvgis => pvgis_columns(),
        SourceTag::Plants => crate::table::PLANT_COLUMNS
            .iter()
            .map(|s| s.to_string())
            .collect(),
        SourceTag::Other => Vec::new(),
    }
}

/// Join every source onto `grid` and normalize the result.
///
/// Each source is validated against the variable catalog for its tag; a
/// PVGIS source is either folded to its annual mean column or skipped
/// entirely depending on [`CubeOptions::include_pvgis`].
pub fn build_cube(
    sources: &[Table],
    grid: &[Location],
    opts: CubeOptions,
) -> Result<DataCube, CubeError> {
    if grid.is_empty() {
        return Err(CubeError::EmptyTable);
    }
    if sources.is_empty() {
        return Err(CubeError::DisjointCoverage("no sources given".into()));
    }

    let mut seen: Vec<String> = Vec::new();
    // start from the bare grid; sources attach columns
    let mut joined = Table::new(SourceTag::Other, grid.to_vec(), vec![])?;

    let mut provenance = BTreeMap::new();
    for source in sources {
        if source.n_rows() == 0 {
            return Err(CubeError::DisjointCoverage(source.source_tag.to_string()));
        }
        let catalog = catalog_for(source.source_tag);
        for name in source.column_names() {
            if !catalog.iter().any(|c| c == name) {
                return Err(CubeError::UnknownColumn(format!(
                    "column `{name}` is not in the {} catalog",
                    source.source_tag
                )));
            }
        }

        let attach = if source.source_tag == SourceTag::Pvgis {
            if !opts.include_pvgis {
                continue;
            }
            pvgis_annual_mean(source)?
        } else {
            source.clone()
        };

        for name in attach.column_names() {
            if seen.iter().any(|s| s == name) {
                return Err(CubeError::UnknownColumn(format!(
                    "column `{name}` appears in more than one source"
                )));
            }
            seen.push(name.to_string());
            provenance.insert(name.to_string(), source.source_tag);
        }
        joined = knn_join(&joined, &attach, opts.k)?;
    }

    let normalized = normalize(&joined)?;
    Ok(DataCube {
        table: normalized.table,
        norm: normalized.params,
        provenance,
        constant_columns: normalized.constant_columns,
    })
}

/// Reduce the 12 PVGIS monthly means to one `pvgis_monthly_mean` column.
pub fn pvgis_annual_mean(source: &Table) -> Result<Table, CubeError> {
    let mut mean = vec![0.0; source.n_rows()];
    for m in 1..=12 {
        let name = format!("em_{m:02}");
        let col = source
            .column(&name)
            .ok_or(CubeError::MissingColumn(name))?;
        for (acc, v) in mean.iter_mut().zip(&col.values) {
            *acc += v;
        }
    }
    for v in &mut mean {
        *v /= 12.0;
    }
    Table::new(
        SourceTag::Pvgis,
        source.locations.clone(),
        vec![Column {
            name: "pvgis_monthly_mean".to_string(),
            values: mean,
        }],
    )
}

/// Sidecar metadata written next to the cube CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubeMeta {
    pub normalization: NormalizationParams,
    pub provenance: BTreeMap<String, SourceTag>,
    pub constant_columns: Vec<String>,
}

/// Write `cube.csv` and `cube_meta.json` into `dir`; returns both paths.
pub fn write_cube(cube: &DataCube, dir: &Path) -> Result<(std::path::PathBuf, std::path::PathBuf), CubeError> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join("cube.csv");
    let mut out = String::new();
    out.push_str("lat,lon");
    for name in cube.table.column_names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..cube.n_rows() {
        let loc = &cube.table.locations[i];
        out.push_str(&format!("{},{}", loc.lat, loc.lon));
        for col in cube.table.columns() {
            out.push_str(&format!(",{}", col.values[i]));
        }
        out.push('\n');
    }
    std::fs::File::create(&csv_path)?.write_all(out.as_bytes())?;

    let meta = CubeMeta {
        normalization: cube.norm.clone(),
        provenance: cube.provenance.clone(),
        constant_columns: cube.constant_columns.clone(),
    };
    let meta_path = dir.join("cube_meta.json");
    let json = serde_json::to_string_pretty(&meta).expect("cube meta serialization");
    std::fs::File::create(&meta_path)?.write_all(json.as_bytes())?;
    Ok((csv_path, meta_path))
}

/// Load a cube CSV written by [`write_cube`]; the sidecar is optional.
pub fn load_cube(csv_path: &Path) -> Result<DataCube, CubeError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(csv_path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    if headers.first().map(String::as_str) != Some("lat") || headers.get(1).map(String::as_str) != Some("lon") {
        return Err(CubeError::MissingColumn("lat".into()));
    }
    let mut locations = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); headers.len() - 2];
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |col: &str, raw: &str| -> Result<f64, CubeError> {
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CubeError::NonNumericCell {
                    row: i + 1,
                    col: col.to_string(),
                })
        };
        let lat = parse("lat", &record[0])?;
        let lon = parse("lon", &record[1])?;
        locations.push(Location::new(lat, lon)?);
        for (c, slot) in values.iter_mut().enumerate() {
            slot.push(parse(&headers[c + 2], &record[c + 2])?);
        }
    }
    if locations.is_empty() {
        return Err(CubeError::EmptyTable);
    }
    let columns: Vec<Column> = headers[2..]
        .iter()
        .zip(values)
        .map(|(name, values)| Column {
            name: name.clone(),
            values,
        })
        .collect();
    let table = Table::new(SourceTag::Other, locations, columns)?;

    let meta_path = csv_path.with_file_name("cube_meta.json");
    let (norm, provenance, constant_columns) = if meta_path.exists() {
        let meta: CubeMeta = serde_json::from_str(&std::fs::read_to_string(&meta_path)?)
            .map_err(|e| CubeError::RowMismatch(format!("bad cube sidecar: {e}")))?;
        (meta.normalization, meta.provenance, meta.constant_columns)
    } else {
        (BTreeMap::new(), BTreeMap::new(), Vec::new())
    };
    Ok(DataCube {
        table,
        norm,
        provenance,
        constant_columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_at(
        tag: SourceTag,
        points: &[(f64, f64)],
        cols: &[(&str, &[f64])],
    ) -> Table {
        let locations = points
            .iter()
            .map(|&(lat, lon)| Location::new(lat, lon).unwrap())
            .collect();
        let columns = cols
            .iter()
            .map(|(name, values)| Column {
                name: name.to_string(),
                values: values.to_vec(),
            })
            .collect();
        Table::new(tag, locations, columns).unwrap()
    }

    #[test]
    fn normalize_maps_to_unit_interval() {
        let t = table_at(SourceTag::Other, &[(0.0, 0.0), (0.0, 1.0), (0.0, 2.0)], &[("v", &[1.0, 3.0, 5.0])]);
        let n = normalize(&t).unwrap();
        assert_eq!(n.table.column("v").unwrap().values, vec![0.0, 0.5, 1.0]);
        assert!(n.constant_columns.is_empty());
        let scale = n.params.get("v").unwrap();
        assert_eq!((scale.min, scale.max), (1.0, 5.0));
    }

    #[test]
    fn normalize_constant_column_flagged() {
        let t = table_at(SourceTag::Other, &[(0.0, 0.0), (0.0, 1.0), (0.0, 2.0)], &[("v", &[7.0, 7.0, 7.0])]);
        let n = normalize(&t).unwrap();
        assert_eq!(n.table.column("v").unwrap().values, vec![0.0, 0.0, 0.0]);
        assert_eq!(n.constant_columns, vec!["v".to_string()]);
    }

    #[test]
    fn normalize_two_points() {
        let t = table_at(SourceTag::Other, &[(0.0, 0.0), (0.0, 1.0)], &[("v", &[0.0, 1.0])]);
        let n = normalize(&t).unwrap();
        assert_eq!(n.table.column("v").unwrap().values, vec![0.0, 1.0]);
        let scale = n.params.get("v").unwrap();
        assert_eq!((scale.min, scale.max), (0.0, 1.0));
    }

    #[test]
    fn knn_single_neighbor_copies_value() {
        let base = table_at(SourceTag::Other, &[(0.0, 0.0)], &[]);
        let other = table_at(SourceTag::Plants, &[(1.0, 1.0)], &[("capacity_factor", &[10.0])]);
        let joined = knn_join(&base, &other, 1).unwrap();
        assert_eq!(joined.column("capacity_factor").unwrap().values, vec![10.0]);
    }

    #[test]
    fn knn_symmetric_pair_averages() {
        let base = table_at(SourceTag::Other, &[(0.0, 0.0)], &[]);
        let other = table_at(
            SourceTag::Plants,
            &[(0.0, 1.0), (0.0, -1.0)],
            &[("capacity_factor", &[2.0, 4.0])],
        );
        let joined = knn_join(&base, &other, 2).unwrap();
        assert_eq!(joined.column("capacity_factor").unwrap().values, vec![3.0]);
    }

    #[test]
    fn knn_k_too_large() {
        let base = table_at(SourceTag::Other, &[(0.0, 0.0)], &[]);
        let other = table_at(
            SourceTag::Plants,
            &[(0.0, 1.0), (0.0, -1.0)],
            &[("capacity_factor", &[2.0, 4.0])],
        );
        assert!(matches!(
            knn_join(&base, &other, 3),
            Err(CubeError::KNotSatisfiable { k: 3, rows: 2 })
        ));
    }

    #[test]
    fn knn_coincident_location_returns_exact_row() {
        let base = table_at(SourceTag::Other, &[(2.0, 3.0)], &[]);
        let other = table_at(
            SourceTag::Plants,
            &[(0.0, 0.0), (2.0, 3.0), (5.0, 5.0)],
            &[("capacity_factor", &[0.1, 0.7, 0.9])],
        );
        let joined = knn_join(&base, &other, 1).unwrap();
        assert_eq!(joined.column("capacity_factor").unwrap().values, vec![0.7]);
    }

    #[test]
    fn build_cube_counts_columns_and_bounds() {
        let atlas_vals: Vec<(&str, &[f64])> = crate::table::ATLAS_COLUMNS
            .iter()
            .map(|&n| (n, [1.0, 2.0, 4.0].as_slice()))
            .collect();
        let atlas = table_at(SourceTag::Atlas, &[(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)], &atlas_vals);
        let station_vals: Vec<(&str, &[f64])> = crate::table::STATION_COLUMNS
            .iter()
            .map(|&n| (n, [3.0, 9.0].as_slice()))
            .collect();
        let stations = table_at(SourceTag::Stations, &[(0.5, 0.5), (0.0, 0.9)], &station_vals);
        let grid = vec![
            Location::new(0.0, 0.0).unwrap(),
            Location::new(0.2, 0.2).unwrap(),
            Location::new(0.9, 0.1).unwrap(),
        ];
        let cube = build_cube(
            &[atlas, stations],
            &grid,
            CubeOptions {
                k: 2,
                include_pvgis: false,
            },
        )
        .unwrap();
        assert_eq!(cube.table.columns().len(), 5 + 12);
        assert_eq!(cube.n_rows(), 3);
        for col in cube.table.columns() {
            for &v in &col.values {
                assert!((0.0..=1.0).contains(&v), "{} out of range: {v}", col.name);
            }
        }
    }

    #[test]
    fn build_cube_rejects_duplicate_columns() {
        let a = table_at(SourceTag::Plants, &[(0.0, 0.0)], &[("capacity_factor", &[0.5])]);
        let b = table_at(SourceTag::Plants, &[(1.0, 1.0)], &[("capacity_factor", &[0.7])]);
        let grid = vec![Location::new(0.0, 0.0).unwrap()];
        assert!(matches!(
            build_cube(&[a, b], &grid, CubeOptions { k: 1, include_pvgis: false }),
            Err(CubeError::UnknownColumn(_))
        ));
    }

    #[test]
    fn build_cube_rejects_off_catalog_columns() {
        let bad = table_at(SourceTag::Atlas, &[(0.0, 0.0)], &[("mystery", &[0.5])]);
        let grid = vec![Location::new(0.0, 0.0).unwrap()];
        assert!(matches!(
            build_cube(&[bad], &grid, CubeOptions::default()),
            Err(CubeError::UnknownColumn(_))
        ));
    }

    #[test]
    fn cube_roundtrips_through_files() {
        let plants = table_at(
            SourceTag::Plants,
            &[(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)],
            &[("capacity_factor", &[0.1, 0.5, 0.9])],
        );
        let grid: Vec<Location> = [(0.1, 0.1), (0.9, 0.2)]
            .iter()
            .map(|&(a, b)| Location::new(a, b).unwrap())
            .collect();
        let cube = build_cube(&[plants], &grid, CubeOptions { k: 1, include_pvgis: false }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (csv_path, _) = write_cube(&cube, dir.path()).unwrap();
        let loaded = load_cube(&csv_path).unwrap();
        assert_eq!(loaded.table, cube.table);
        assert_eq!(loaded.norm, cube.norm);
    }

    #[test]
    fn pvgis_reduced_to_annual_mean() {
        let names = pvgis_columns();
        let cols: Vec<(&str, &[f64])> = names
            .iter()
            .map(|n| (n.as_str(), [2.0].as_slice()))
            .collect();
        let pvgis = table_at(SourceTag::Pvgis, &[(0.0, 0.0)], &cols);
        let reduced = pvgis_annual_mean(&pvgis).unwrap();
        assert_eq!(reduced.column("pvgis_monthly_mean").unwrap().values, vec![2.0]);

        let grid = vec![Location::new(0.0, 0.0).unwrap()];
        let with_flag = build_cube(
            &[pvgis.clone()],
            &grid,
            CubeOptions { k: 1, include_pvgis: true },
        )
        .unwrap();
        assert_eq!(with_flag.table.column_names(), vec!["pvgis_monthly_mean"]);
        let without = build_cube(
            &[pvgis],
            &grid,
            CubeOptions { k: 1, include_pvgis: false },
        );
        // a pvgis-only build with the flag off joins nothing
        assert!(without.unwrap().table.columns().is_empty());
    }
}
