//! Closed-form production estimate from the covariance and correlation
//! structure of the normalized cube: `E = a·X² + b·X`, where `a` is the
//! covariance row of the target variable, `b` the correlation row, and
//! `X` the cube row vector. Variables known to depress production get
//! their signs forced negative before evaluation.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::datacube::DataCube;
use crate::geo::Location;
use crate::stats;
use crate::table::CubeError;

/// Variables whose correlation and covariance signs are inverted by
/// default.
pub const DEFAULT_FLIP: [&str; 3] = ["avg_max_temp", "avg_rel_humidity", "total_precipitation"];

/// Default target variable of the estimate.
pub const DEFAULT_TARGET: &str = "direct_normal";

/// Sample covariance and Pearson correlation over the cube columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovCorMatrices {
    pub names: Vec<String>,
    pub covariance: Vec<Vec<f64>>,
    pub correlation: Vec<Vec<f64>>,
    /// Constant columns; their correlations are reported as 0.
    pub warnings: Vec<String>,
}

/// Covariance (n−1 denominator) and correlation matrices of the cube
/// columns. Constant columns correlate as 0 with a warning; the
/// correlation diagonal is 1 elsewhere.
pub fn cov_corr(cube: &DataCube) -> Result<CovCorMatrices, CubeError> {
    let n = cube.n_rows();
    if n < 2 {
        return Err(CubeError::TooFewRows { need: 2, got: n });
    }
    let columns = cube.table.columns();
    let p = columns.len();
    let means: Vec<f64> = columns.iter().map(|c| stats::mean(&c.values)).collect();

    let mut covariance = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in i..p {
            let mut acc = 0.0;
            for r in 0..n {
                acc += (columns[i].values[r] - means[i]) * (columns[j].values[r] - means[j]);
            }
            let c = acc / (n - 1) as f64;
            covariance[i][j] = c;
            covariance[j][i] = c;
        }
    }

    // constant detection by exact value equality, not by variance: the
    // accumulated mean of a constant column need not be exactly its value
    let constant: Vec<bool> = columns
        .iter()
        .map(|c| c.values.iter().all(|&v| v == c.values[0]))
        .collect();
    let sd: Vec<f64> = (0..p)
        .map(|i| if constant[i] { 0.0 } else { covariance[i][i].sqrt() })
        .collect();
    let mut warnings = Vec::new();
    let mut correlation = vec![vec![0.0; p]; p];
    for i in 0..p {
        if sd[i] == 0.0 {
            warnings.push(columns[i].name.clone());
        }
    }
    for i in 0..p {
        for j in 0..p {
            correlation[i][j] = if sd[i] > 0.0 && sd[j] > 0.0 {
                if i == j {
                    1.0
                } else {
                    covariance[i][j] / (sd[i] * sd[j])
                }
            } else {
                0.0
            };
        }
    }

    Ok(CovCorMatrices {
        names: columns.iter().map(|c| c.name.clone()).collect(),
        covariance,
        correlation,
        warnings,
    })
}

/// Which sign rows the flip rule touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipMode {
    /// Negate both the covariance and correlation entries (default; keeps
    /// the quadratic and linear terms directionally consistent).
    Both,
    /// Negate only the correlation entries.
    CorrelationOnly,
}

/// The `a`/`b` weight rows of the estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovCorWeights {
    pub variable_names: Vec<String>,
    /// Covariance of the target with each variable.
    pub a: Vec<f64>,
    /// Correlation of the target with each variable.
    pub b: Vec<f64>,
    pub flipped: BTreeSet<String>,
    pub target: String,
    pub flip_mode: FlipMode,
}

/// Extract the target's covariance/correlation rows and force the listed
/// variables to a negative influence (entries negated when positive, so
/// the rule is idempotent).
pub fn build_weights(
    matrices: &CovCorMatrices,
    target: &str,
    flip: &[String],
    mode: FlipMode,
) -> Result<CovCorWeights, CubeError> {
    let t = matrices
        .names
        .iter()
        .position(|n| n == target)
        .ok_or_else(|| CubeError::UnknownVariable(target.to_string()))?;
    for name in flip {
        if !matrices.names.iter().any(|n| n == name) {
            return Err(CubeError::UnknownVariable(name.clone()));
        }
    }
    let mut a = matrices.covariance[t].clone();
    let mut b = matrices.correlation[t].clone();
    let mut flipped = BTreeSet::new();
    for name in flip {
        let i = matrices.names.iter().position(|n| n == name).unwrap();
        if matches!(mode, FlipMode::Both) && a[i] > 0.0 {
            a[i] = -a[i];
        }
        if b[i] > 0.0 {
            b[i] = -b[i];
        }
        flipped.insert(name.clone());
    }
    Ok(CovCorWeights {
        variable_names: matrices.names.clone(),
        a,
        b,
        flipped,
        target: target.to_string(),
        flip_mode: mode,
    })
}

/// Estimate values at cube rows (or any aligned row set).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateField {
    pub locations: Vec<Location>,
    pub values: Vec<f64>,
}

impl EstimateField {
    /// Min-max rescale to [0, 1]; used before cross-source comparisons.
    pub fn rescaled(&self) -> EstimateField {
        EstimateField {
            locations: self.locations.clone(),
            values: stats::rescale_unit(&self.values),
        }
    }
}

/// Evaluate `E = Σ aᵢXᵢ² + Σ bᵢXᵢ` on every cube row.
pub fn estimate(weights: &CovCorWeights, cube: &DataCube) -> Result<EstimateField, CubeError> {
    let mut columns = Vec::with_capacity(weights.variable_names.len());
    for name in &weights.variable_names {
        let col = cube
            .table
            .column(name)
            .ok_or_else(|| CubeError::MissingVariable(name.clone()))?;
        columns.push(&col.values);
    }
    let values = crate::exec::map_range(cube.n_rows(), |row| {
        let mut e = 0.0;
        for (i, col) in columns.iter().enumerate() {
            let x = col[row];
            e += weights.a[i] * x * x + weights.b[i] * x;
        }
        e
    });
    Ok(EstimateField {
        locations: cube.table.locations.clone(),
        values,
    })
}

/// MSE/MAE between two aligned fields.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FieldMetrics {
    pub mse: f64,
    pub mae: f64,
}

/// Plain MSE/MAE over aligned rows; callers rescale first when comparing
/// fields from different sources.
pub fn evaluate_field(
    estimate: &EstimateField,
    reference: &EstimateField,
) -> Result<FieldMetrics, CubeError> {
    if estimate.values.len() != reference.values.len() {
        return Err(CubeError::RowMismatch(format!(
            "estimate has {} rows, reference {}",
            estimate.values.len(),
            reference.values.len()
        )));
    }
    for (a, b) in estimate.locations.iter().zip(&reference.locations) {
        if (a.lat - b.lat).abs() > 1e-9 || (a.lon - b.lon).abs() > 1e-9 {
            return Err(CubeError::RowMismatch(
                "row locations do not line up".into(),
            ));
        }
    }
    Ok(FieldMetrics {
        mse: stats::mse(&reference.values, &estimate.values),
        mae: stats::mae(&reference.values, &estimate.values),
    })
}
