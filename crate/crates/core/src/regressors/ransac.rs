//! RANSAC over an OLS base estimator. The inlier threshold defaults to
//! the median absolute residual of a preliminary full-data OLS fit.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::linear::ols;
use super::{FittedState, RegressorError, RegressorSpec};
use crate::seeds;

fn residuals(weights: &[f64], intercept: f64, x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(y)
        .map(|(row, &t)| {
            let pred = intercept + weights.iter().zip(row).map(|(w, v)| w * v).sum::<f64>();
            (t - pred).abs()
        })
        .collect()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

pub(super) fn fit_ransac(
    spec: &RegressorSpec,
    x: &[Vec<f64>],
    y: &[f64],
) -> Result<FittedState, RegressorError> {
    let n = x.len();
    let d = x[0].len();
    let y_var = crate::stats::sample_variance(y);
    if y_var == 0.0 {
        return Err(RegressorError::DegenerateData(
            "zero-variance target leaves no inlier threshold".into(),
        ));
    }

    let (prelim_w, prelim_b) = ols(x, y)?;
    let prelim_res = residuals(&prelim_w, prelim_b, x, y);
    let threshold = median(prelim_res.clone());
    if threshold == 0.0 {
        // preliminary fit is already exact on a majority of rows
        return Ok(FittedState::Linear {
            weights: prelim_w,
            intercept: prelim_b,
        });
    }

    let minimal = (d + 1).min(n);
    let count_inliers = |res: &[f64]| res.iter().filter(|&&r| r <= threshold).count();
    let mut best_inliers = count_inliers(&prelim_res);
    let mut best = (prelim_w, prelim_b);

    let iterations = spec.param("n_iterations") as usize;
    let mut pool: Vec<usize> = (0..n).collect();
    for it in 0..iterations {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(spec.seed, &[it as u64]));
        pool.shuffle(&mut rng);
        let subset = &pool[..minimal];
        let sx: Vec<Vec<f64>> = subset.iter().map(|&i| x[i].clone()).collect();
        let sy: Vec<f64> = subset.iter().map(|&i| y[i]).collect();
        let Ok((w, b)) = ols(&sx, &sy) else { continue };
        let inliers = count_inliers(&residuals(&w, b, x, y));
        if inliers > best_inliers {
            best_inliers = inliers;
            best = (w, b);
        }
    }

    // refit on the consensus set of the winning candidate
    let res = residuals(&best.0, best.1, x, y);
    let keep: Vec<usize> = (0..n).filter(|&i| res[i] <= threshold).collect();
    if keep.len() > minimal {
        let kx: Vec<Vec<f64>> = keep.iter().map(|&i| x[i].clone()).collect();
        let ky: Vec<f64> = keep.iter().map(|&i| y[i]).collect();
        if let Ok((w, b)) = ols(&kx, &ky) {
            best = (w, b);
        }
    }
    Ok(FittedState::Linear {
        weights: best.0,
        intercept: best.1,
    })
}
