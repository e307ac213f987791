//! Location-keyed tables and the fixed variable catalog.
//!
//! Every input file is a CSV with a mandatory header, a `lat`/`lon` pair
//! (plus `alt` for stations) and a schema-specific set of numeric columns.
//! Parsing is strict: missing columns, extra columns, empty files and
//! non-numeric or non-finite cells are all rejected.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{GeoError, Location};

/// The five irradiation components of the solar atlas.
pub const ATLAS_COLUMNS: [&str; 5] = [
    "global_horizontal",
    "tilted",
    "direct_normal",
    "diffuse",
    "par",
];

/// The twelve station variables.
pub const STATION_COLUMNS: [&str; 12] = [
    "total_solar_irradiance",
    "days_with_precipitation",
    "atm_pressure",
    "avg_max_temp",
    "avg_rel_humidity",
    "avg_wind_speed",
    "avg_cloudiness",
    "total_precipitation",
    "avg_comp_temp",
    "avg_visibility",
    "avg_min_temp",
    "evaporation",
];

/// Plant production column.
pub const PLANT_COLUMNS: [&str; 1] = ["capacity_factor"];

/// Monthly means `em_01..em_12` followed by monthly standard deviations
/// `sd_01..sd_12`.
pub fn pvgis_columns() -> Vec<String> {
    let mut cols = Vec::with_capacity(24);
    for m in 1..=12 {
        cols.push(format!("em_{m:02}"));
    }
    for m in 1..=12 {
        cols.push(format!("sd_{m:02}"));
    }
    cols
}

#[derive(Debug, Error)]
pub enum CubeError {
    #[error("MissingColumn: required column `{0}` is absent")]
    MissingColumn(String),
    #[error("NonNumericCell: row {row}, column `{col}` is not a finite number")]
    NonNumericCell { row: usize, col: String },
    #[error("EmptyTable: no data rows")]
    EmptyTable,
    #[error("UnknownColumn: {0}")]
    UnknownColumn(String),
    #[error("KNotSatisfiable: k={k} but the joined table has {rows} rows")]
    KNotSatisfiable { k: usize, rows: usize },
    #[error("DisjointCoverage: source `{0}` contributes zero rows")]
    DisjointCoverage(String),
    #[error("MissingVariable: `{0}` not present in the cube")]
    MissingVariable(String),
    #[error("TooFewRows: need at least {need} rows, got {got}")]
    TooFewRows { need: usize, got: usize },
    #[error("UnknownVariable: `{0}` not present in the matrices")]
    UnknownVariable(String),
    #[error("RowMismatch: {0}")]
    RowMismatch(String),
    #[error("LengthMismatch: columns must have equal length")]
    LengthMismatch,
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("Io: {0}")]
    Io(#[from] std::io::Error),
    #[error("Csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Where a table (and later, a cube column) came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceTag {
    Atlas,
    Stations,
    Pvgis,
    Plants,
    Other,
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SourceTag::Atlas => "atlas",
            SourceTag::Stations => "stations",
            SourceTag::Pvgis => "pvgis",
            SourceTag::Plants => "plants",
            SourceTag::Other => "other",
        };
        f.write_str(s)
    }
}

/// Input schema accepted by [`load_table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Atlas,
    Stations,
    Pvgis,
    Plants,
}

impl Schema {
    pub fn source_tag(self) -> SourceTag {
        match self {
            Schema::Atlas => SourceTag::Atlas,
            Schema::Stations => SourceTag::Stations,
            Schema::Pvgis => SourceTag::Pvgis,
            Schema::Plants => SourceTag::Plants,
        }
    }

    /// Does this schema carry an `alt` column after lat/lon?
    pub fn has_alt(self) -> bool {
        matches!(self, Schema::Stations)
    }

    /// Data columns (everything except lat/lon/alt) in file order.
    pub fn data_columns(self) -> Vec<String> {
        match self {
            Schema::Atlas => ATLAS_COLUMNS.iter().map(|s| s.to_string()).collect(),
            Schema::Stations => STATION_COLUMNS.iter().map(|s| s.to_string()).collect(),
            Schema::Pvgis => pvgis_columns(),
            Schema::Plants => PLANT_COLUMNS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn parse(name: &str) -> Option<Schema> {
        match name {
            "atlas" => Some(Schema::Atlas),
            "stations" => Some(Schema::Stations),
            "pvgis" => Some(Schema::Pvgis),
            "plants" => Some(Schema::Plants),
            _ => None,
        }
    }
}

/// A named numeric column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

/// A location-keyed table of numeric columns, all the same length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub source_tag: SourceTag,
    pub locations: Vec<Location>,
    columns: Vec<Column>,
}

impl Table {
    /// Build a table, checking the length/finiteness/uniqueness invariants.
    pub fn new(
        source_tag: SourceTag,
        locations: Vec<Location>,
        columns: Vec<Column>,
    ) -> Result<Self, CubeError> {
        if locations.is_empty() {
            return Err(CubeError::EmptyTable);
        }
        for col in &columns {
            if col.values.len() != locations.len() {
                return Err(CubeError::LengthMismatch);
            }
            if let Some(row) = col.values.iter().position(|v| !v.is_finite()) {
                return Err(CubeError::NonNumericCell {
                    row: row + 1,
                    col: col.name.clone(),
                });
            }
        }
        for (i, a) in columns.iter().enumerate() {
            if columns[..i].iter().any(|b| b.name == a.name) {
                return Err(CubeError::UnknownColumn(format!(
                    "duplicate column name `{}`",
                    a.name
                )));
            }
        }
        Ok(Table {
            source_tag,
            locations,
            columns,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.locations.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// One data row as a vector, in column order.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c.values[i]).collect()
    }
}

/// Load and validate a CSV file against `schema`.
///
/// Columns are matched by header name; the full schema set must be present
/// and nothing else. Rows keep file order.
pub fn load_table(path: &Path, schema: Schema) -> Result<Table, CubeError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();

    let mut required = vec!["lat".to_string(), "lon".to_string()];
    if schema.has_alt() {
        required.push("alt".to_string());
    }
    required.extend(schema.data_columns());

    for name in &required {
        if !headers.iter().any(|h| h == name) {
            return Err(CubeError::MissingColumn(name.clone()));
        }
    }
    for h in &headers {
        if !required.iter().any(|r| r == h) {
            return Err(CubeError::UnknownColumn(format!(
                "column `{h}` is not part of the {} schema",
                schema.source_tag()
            )));
        }
    }

    let index_of = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let lat_idx = index_of("lat");
    let lon_idx = index_of("lon");
    let alt_idx = schema.has_alt().then(|| index_of("alt"));
    let data_cols = schema.data_columns();
    let data_idx: Vec<usize> = data_cols.iter().map(|c| index_of(c)).collect();

    let parse_cell = |row: usize, col: &str, raw: &str| -> Result<f64, CubeError> {
        raw.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| CubeError::NonNumericCell {
                row,
                col: col.to_string(),
            })
    };

    let mut locations = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); data_cols.len()];
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let lat = parse_cell(row, "lat", &record[lat_idx])?;
        let lon = parse_cell(row, "lon", &record[lon_idx])?;
        let alt = match alt_idx {
            Some(idx) => Some(parse_cell(row, "alt", &record[idx])?),
            None => None,
        };
        locations.push(Location::with_alt(lat, lon, alt)?);
        for (slot, (&idx, name)) in values.iter_mut().zip(data_idx.iter().zip(&data_cols)) {
            slot.push(parse_cell(row, name, &record[idx])?);
        }
    }
    if locations.is_empty() {
        return Err(CubeError::EmptyTable);
    }

    let columns = data_cols
        .into_iter()
        .zip(values)
        .map(|(name, values)| Column { name, values })
        .collect();
    Table::new(schema.source_tag(), locations, columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_single_plant_row() {
        let f = write_tmp("lat,lon,capacity_factor\n-8.0,-35.0,0.22\n");
        let t = load_table(f.path(), Schema::Plants).unwrap();
        assert_eq!(t.n_rows(), 1);
        assert_eq!(t.column("capacity_factor").unwrap().values, vec![0.22]);
        assert_eq!(t.locations[0].lat, -8.0);
    }

    #[test]
    fn missing_lon_is_reported() {
        let f = write_tmp("lat,capacity_factor\n-8.0,0.22\n");
        let err = load_table(f.path(), Schema::Plants).unwrap_err();
        assert!(matches!(err, CubeError::MissingColumn(ref c) if c == "lon"));
    }

    #[test]
    fn non_numeric_cell_names_row_and_column() {
        let f = write_tmp("lat,lon,capacity_factor\n-8.0,-35.0,abc\n");
        let err = load_table(f.path(), Schema::Plants).unwrap_err();
        match err {
            CubeError::NonNumericCell { row, col } => {
                assert_eq!(row, 1);
                assert_eq!(col, "capacity_factor");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_empty_table() {
        let f = write_tmp("lat,lon,capacity_factor\n");
        assert!(matches!(
            load_table(f.path(), Schema::Plants),
            Err(CubeError::EmptyTable)
        ));
    }

    #[test]
    fn extra_column_rejected() {
        let f = write_tmp("lat,lon,capacity_factor,bogus\n-8.0,-35.0,0.22,1\n");
        assert!(matches!(
            load_table(f.path(), Schema::Plants),
            Err(CubeError::UnknownColumn(_))
        ));
    }

    #[test]
    fn nan_cell_rejected() {
        let f = write_tmp("lat,lon,capacity_factor\n-8.0,-35.0,NaN\n");
        assert!(matches!(
            load_table(f.path(), Schema::Plants),
            Err(CubeError::NonNumericCell { .. })
        ));
    }

    #[test]
    fn stations_schema_reads_alt_into_location() {
        let cols = STATION_COLUMNS.join(",");
        let vals = vec!["1.0"; 12].join(",");
        let f = write_tmp(&format!("lat,lon,alt,{cols}\n-8.0,-35.0,120.0,{vals}\n"));
        let t = load_table(f.path(), Schema::Stations).unwrap();
        assert_eq!(t.locations[0].alt, Some(120.0));
        assert_eq!(t.columns().len(), 12);
    }
}
