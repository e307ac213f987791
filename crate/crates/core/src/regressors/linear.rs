//! Linear-family members: ordinary least squares, SGD with the shared
//! learning-rate schedules, passive-aggressive updates and the linear
//! epsilon-insensitive SVR stand-in.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{FittedState, RegressorError, RegressorSpec};
use crate::neuralnet::LrSchedule;
use crate::seeds;

pub(super) fn fit_ols(x: &[Vec<f64>], y: &[f64]) -> Result<FittedState, RegressorError> {
    let (weights, intercept) = ols(x, y)?;
    Ok(FittedState::Linear { weights, intercept })
}

/// Least squares with intercept via the normal equations.
pub(super) fn ols(x: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64), RegressorError> {
    let n = x.len();
    let d = x[0].len();
    let design = DMatrix::from_fn(n, d + 1, |i, j| if j < d { x[i][j] } else { 1.0 });
    let target = DVector::from_column_slice(y);
    let gram = design.transpose() * &design;
    let moment = design.transpose() * target;
    let solution = gram
        .lu()
        .solve(&moment)
        .ok_or_else(|| RegressorError::DegenerateData("singular normal equations".into()))?;
    let weights = solution.as_slice()[..d].to_vec();
    Ok((weights, solution[d]))
}

fn dot_plus(w: &[f64], b: f64, row: &[f64]) -> f64 {
    b + w.iter().zip(row).map(|(a, v)| a * v).sum::<f64>()
}

fn epoch_loss(w: &[f64], b: f64, x: &[Vec<f64>], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(row, &t)| {
            let e = dot_plus(w, b, row) - t;
            e * e
        })
        .sum::<f64>()
        / x.len() as f64
}

pub(super) fn fit_sgd(spec: &RegressorSpec, x: &[Vec<f64>], y: &[f64]) -> FittedState {
    let d = x[0].len();
    let lr0 = spec.param("learning_rate");
    let epochs = spec.param_usize("n_iterations");
    let schedule = LrSchedule::from_code(spec.param("schedule") as u8);

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut lr = lr0;
    let mut best_loss = f64::INFINITY;
    let mut stagnant = 0u32;
    for epoch in 0..epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(spec.seed, &[epoch as u64]));
        order.shuffle(&mut rng);
        lr = match schedule {
            LrSchedule::Constant => lr0,
            LrSchedule::InvScaling => lr0 * ((epoch + 1) as f64).powf(-0.5),
            LrSchedule::Adaptive => lr,
        };
        for &i in &order {
            let err = dot_plus(&w, b, &x[i]) - y[i];
            for (wj, &v) in w.iter_mut().zip(&x[i]) {
                *wj -= lr * err * v;
            }
            b -= lr * err;
        }
        if schedule == LrSchedule::Adaptive {
            let loss = epoch_loss(&w, b, x, y);
            if loss < best_loss - 1e-10 {
                best_loss = loss;
                stagnant = 0;
            } else {
                stagnant += 1;
                if stagnant >= 2 {
                    lr *= 0.5;
                    stagnant = 0;
                }
            }
        }
    }
    FittedState::Linear {
        weights: w,
        intercept: b,
    }
}

pub(super) fn fit_passive_aggressive(spec: &RegressorSpec, x: &[Vec<f64>], y: &[f64]) -> FittedState {
    let d = x[0].len();
    let c = spec.param("c");
    let epsilon = spec.param("epsilon");
    let epochs = spec.param_usize("n_iterations");

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..x.len()).collect();
    for epoch in 0..epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(spec.seed, &[epoch as u64]));
        order.shuffle(&mut rng);
        for &i in &order {
            let pred = dot_plus(&w, b, &x[i]);
            let loss = (pred - y[i]).abs() - epsilon;
            if loss > 0.0 {
                // PA-I step, intercept folded into the squared norm
                let norm2 = x[i].iter().map(|v| v * v).sum::<f64>() + 1.0;
                let tau = (loss / norm2).min(c);
                let sign = (y[i] - pred).signum();
                for (wj, &v) in w.iter_mut().zip(&x[i]) {
                    *wj += sign * tau * v;
                }
                b += sign * tau;
            }
        }
    }
    FittedState::Linear {
        weights: w,
        intercept: b,
    }
}

/// Linear epsilon-insensitive model by full-batch subgradient descent on
/// `0.5·λ‖w‖² + mean ε-insensitive loss`, λ = 1/c.
pub(super) fn fit_svr_linear(spec: &RegressorSpec, x: &[Vec<f64>], y: &[f64]) -> FittedState {
    let d = x[0].len();
    let n = x.len() as f64;
    let lambda = 1.0 / spec.param("c");
    let epsilon = spec.param("epsilon");
    let lr0 = spec.param("learning_rate");
    let iters = spec.param_usize("n_iterations");

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    for t in 0..iters {
        let lr = lr0 / ((t + 1) as f64).sqrt();
        let mut grad_w = w.iter().map(|wj| lambda * wj).collect::<Vec<f64>>();
        let mut grad_b = 0.0;
        for (row, &target) in x.iter().zip(y) {
            let err = dot_plus(&w, b, row) - target;
            if err.abs() > epsilon {
                let s = err.signum() / n;
                for (g, &v) in grad_w.iter_mut().zip(row) {
                    *g += s * v;
                }
                grad_b += s;
            }
        }
        for (wj, g) in w.iter_mut().zip(&grad_w) {
            *wj -= lr * g;
        }
        b -= lr * grad_b;
    }
    FittedState::Linear {
        weights: w,
        intercept: b,
    }
}
