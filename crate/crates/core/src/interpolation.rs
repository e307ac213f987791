//! Ordinary kriging of plant capacity factor with a power-function
//! variogram.
//!
//! The empirical semivariogram is binned from sample pairs, a power model
//! `γ(h) = nugget + scale·h^exponent` is fitted by profiled least squares
//! (linear in nugget/scale for a fixed exponent, golden-section over the
//! exponent), and predictions solve the ordinary-kriging system with a
//! Lagrange multiplier so weights sum to one. `γ(0) = 0` by convention,
//! which makes the interpolator exact at sample locations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::Location;
use crate::optim::golden_section;

#[derive(Debug, Error)]
pub enum InterpolationError {
    #[error("InsufficientData: need at least {need} {what}, got {got}")]
    InsufficientData {
        need: usize,
        got: usize,
        what: &'static str,
    },
    #[error("FitDiverged: variogram least squares produced non-finite parameters")]
    FitDiverged,
    #[error("SingularSystem: kriging matrix is singular (duplicate sample locations?)")]
    SingularSystem,
    #[error("InvalidVariogram: {0}")]
    InvalidVariogram(String),
}

/// Power-function semivariance model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariogramModel {
    pub scale: f64,
    pub exponent: f64,
    pub nugget: f64,
}

impl VariogramModel {
    pub fn new(scale: f64, exponent: f64, nugget: f64) -> Result<Self, InterpolationError> {
        if !(scale >= 0.0 && nugget >= 0.0 && scale.is_finite() && nugget.is_finite()) {
            return Err(InterpolationError::InvalidVariogram(
                "scale and nugget must be finite and non-negative".into(),
            ));
        }
        if !(exponent > 0.0 && exponent < 2.0) {
            return Err(InterpolationError::InvalidVariogram(format!(
                "exponent {exponent} outside (0, 2)"
            )));
        }
        Ok(VariogramModel {
            scale,
            exponent,
            nugget,
        })
    }

    /// Semivariance at lag `h` km; `γ(0) = 0` so kriging stays exact.
    pub fn semivariance(&self, h: f64) -> f64 {
        if h <= 0.0 {
            0.0
        } else {
            self.nugget + self.scale * h.powf(self.exponent)
        }
    }
}

/// Binned empirical semivariogram.
///
/// Bins split `(0, max_distance]` uniformly; each returned point is the
/// mean pair distance and mean `0.5·(vi − vj)²` of its bin, empty bins
/// omitted.
pub fn empirical_semivariogram(
    samples: &[(Location, f64)],
    n_bins: usize,
) -> Result<Vec<(f64, f64)>, InterpolationError> {
    if samples.len() < 2 {
        return Err(InterpolationError::InsufficientData {
            need: 2,
            got: samples.len(),
            what: "samples",
        });
    }
    let n_bins = n_bins.max(1);
    let mut pairs = Vec::new();
    let mut max_d = 0.0f64;
    for i in 0..samples.len() {
        for j in (i + 1)..samples.len() {
            let d = samples[i].0.haversine_km(&samples[j].0);
            let gamma = 0.5 * (samples[i].1 - samples[j].1).powi(2);
            max_d = max_d.max(d);
            pairs.push((d, gamma));
        }
    }
    if max_d == 0.0 {
        let g = pairs.iter().map(|p| p.1).sum::<f64>() / pairs.len() as f64;
        return Ok(vec![(0.0, g)]);
    }

    let mut dist_sum = vec![0.0; n_bins];
    let mut gamma_sum = vec![0.0; n_bins];
    let mut count = vec![0usize; n_bins];
    for (d, g) in pairs {
        let bin = ((d / max_d * n_bins as f64) as usize).min(n_bins - 1);
        dist_sum[bin] += d;
        gamma_sum[bin] += g;
        count[bin] += 1;
    }
    Ok((0..n_bins)
        .filter(|&b| count[b] > 0)
        .map(|b| (dist_sum[b] / count[b] as f64, gamma_sum[b] / count[b] as f64))
        .collect())
}

/// A fitted variogram and its residual sum of squares.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VariogramFit {
    pub model: VariogramModel,
    pub residual: f64,
}

// Least squares of (nugget, scale) for a fixed exponent, clamped to the
// non-negative quadrant.
fn profile_ls(points: &[(f64, f64)], exponent: f64) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mut sx = 0.0;
    let mut sxx = 0.0;
    let mut sy = 0.0;
    let mut sxy = 0.0;
    for &(h, g) in points {
        let x = h.max(0.0).powf(exponent);
        sx += x;
        sxx += x * x;
        sy += g;
        sxy += x * g;
    }
    let det = n * sxx - sx * sx;
    let (mut nugget, mut scale) = if det.abs() > 1e-300 {
        (
            (sy * sxx - sx * sxy) / det,
            (n * sxy - sx * sy) / det,
        )
    } else {
        (0.0, 0.0)
    };
    if nugget < 0.0 {
        nugget = 0.0;
        scale = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    }
    if scale < 0.0 {
        scale = 0.0;
        nugget = (sy / n).max(0.0);
    }
    let residual: f64 = points
        .iter()
        .map(|&(h, g)| {
            let fit = nugget + scale * h.max(0.0).powf(exponent);
            (g - fit) * (g - fit)
        })
        .sum();
    (nugget, scale, residual)
}

/// Fit `γ(h) = nugget + scale·h^exponent` to empirical points by least
/// squares, with the exponent constrained to (0, 2).
pub fn fit_variogram(empirical: &[(f64, f64)]) -> Result<VariogramFit, InterpolationError> {
    if empirical.len() < 3 {
        return Err(InterpolationError::InsufficientData {
            need: 3,
            got: empirical.len(),
            what: "empirical points",
        });
    }
    if empirical.iter().all(|&(_, g)| g == 0.0) {
        return Ok(VariogramFit {
            model: VariogramModel::new(0.0, 1.0, 0.0)?,
            residual: 0.0,
        });
    }

    const LO: f64 = 1e-3;
    const HI: f64 = 2.0 - 1e-3;
    const GRID: usize = 64;

    // coarse scan to bracket the best exponent, then golden-section refine
    let mut best_i = 0;
    let mut best_r = f64::INFINITY;
    for i in 0..GRID {
        let e = LO + (HI - LO) * i as f64 / (GRID - 1) as f64;
        let (_, _, r) = profile_ls(empirical, e);
        if r < best_r {
            best_r = r;
            best_i = i;
        }
    }
    let step = (HI - LO) / (GRID - 1) as f64;
    let lo = (LO + step * best_i as f64 - step).max(LO);
    let hi = (LO + step * best_i as f64 + step).min(HI);
    let exponent = golden_section(|e| profile_ls(empirical, e).2, lo, hi, 90);
    let (nugget, scale, residual) = profile_ls(empirical, exponent);
    if !(nugget.is_finite() && scale.is_finite() && residual.is_finite()) {
        return Err(InterpolationError::FitDiverged);
    }
    Ok(VariogramFit {
        model: VariogramModel::new(scale, exponent, nugget)?,
        residual,
    })
}

/// One kriging output point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RasterPoint {
    pub location: Location,
    pub prediction: f64,
    pub variance: f64,
}

/// Grid of kriging predictions, in query order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Raster {
    pub points: Vec<RasterPoint>,
}

/// Samples plus a variogram, ready to solve the ordinary-kriging system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KrigingModel {
    samples: Vec<(Location, f64)>,
    variogram: VariogramModel,
}

impl KrigingModel {
    /// Duplicate sample locations are merged to their mean value before
    /// the solve; at least 3 distinct locations must remain.
    pub fn new(
        samples: &[(Location, f64)],
        variogram: VariogramModel,
    ) -> Result<Self, InterpolationError> {
        let mut merged: Vec<(Location, f64, usize)> = Vec::new();
        for (loc, v) in samples {
            match merged
                .iter_mut()
                .find(|(m, _, _)| m.lat == loc.lat && m.lon == loc.lon)
            {
                Some(entry) => {
                    entry.1 += v;
                    entry.2 += 1;
                }
                None => merged.push((*loc, *v, 1)),
            }
        }
        let samples: Vec<(Location, f64)> = merged
            .into_iter()
            .map(|(loc, sum, n)| (loc, sum / n as f64))
            .collect();
        if samples.len() < 3 {
            return Err(InterpolationError::InsufficientData {
                need: 3,
                got: samples.len(),
                what: "distinct sample locations",
            });
        }
        Ok(KrigingModel { samples, variogram })
    }

    pub fn samples(&self) -> &[(Location, f64)] {
        &self.samples
    }

    pub fn variogram(&self) -> &VariogramModel {
        &self.variogram
    }

    fn factorize(&self) -> Result<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, InterpolationError> {
        let n = self.samples.len();
        let a = DMatrix::from_fn(n + 1, n + 1, |i, j| {
            if i < n && j < n {
                self.variogram
                    .semivariance(self.samples[i].0.haversine_km(&self.samples[j].0))
            } else if i == n && j == n {
                0.0
            } else {
                1.0
            }
        });
        let lu = a.lu();
        if lu.is_invertible() {
            Ok(lu)
        } else {
            Err(InterpolationError::SingularSystem)
        }
    }

    fn rhs(&self, target: &Location) -> DVector<f64> {
        let n = self.samples.len();
        DVector::from_fn(n + 1, |i, _| {
            if i < n {
                self.variogram
                    .semivariance(self.samples[i].0.haversine_km(target))
            } else {
                1.0
            }
        })
    }

    /// Kriging weights and Lagrange multiplier at one target location.
    pub fn weights_at(&self, target: &Location) -> Result<(Vec<f64>, f64), InterpolationError> {
        let lu = self.factorize()?;
        let solution = lu
            .solve(&self.rhs(target))
            .ok_or(InterpolationError::SingularSystem)?;
        let n = self.samples.len();
        Ok((solution.as_slice()[..n].to_vec(), solution[n]))
    }

    /// Prediction and kriging variance over a whole grid; the factorization
    /// is shared and grid points evaluate independently.
    pub fn krige_grid(&self, grid: &[Location]) -> Result<Raster, InterpolationError> {
        if grid.is_empty() {
            return Err(InterpolationError::InsufficientData {
                need: 1,
                got: 0,
                what: "grid points",
            });
        }
        let lu = self.factorize()?;
        let n = self.samples.len();
        let points = crate::exec::map_slice(grid, |target| {
            let rhs = self.rhs(target);
            let solution = lu.solve(&rhs).expect("factorization checked invertible");
            let mut prediction = 0.0;
            let mut variance = 0.0;
            for i in 0..n {
                prediction += solution[i] * self.samples[i].1;
                variance += solution[i] * rhs[i];
            }
            variance += solution[n];
            RasterPoint {
                location: *target,
                prediction,
                variance,
            }
        });
        Ok(Raster { points })
    }
}
