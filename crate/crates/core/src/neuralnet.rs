//! Scalar-output multilayer perceptron covering exactly the search
//! surface used by the forecasting GA: four activations, three
//! learning-rate schedules, adam or L-BFGS, arbitrary hidden topology.
//!
//! The loss everywhere is `L = ½·mean (ŷ − y)²`; [`Mlp::gradient`]
//! returns its exact analytic gradient (flattened layer by layer,
//! weights row-major then biases), which the tests check against central
//! finite differences. Inputs are assumed pre-scaled to [0, 1] by
//! callers.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeds;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("DimensionMismatch: expected {expected} inputs, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("NonFiniteLoss: training diverged at epoch {0}")]
    NonFiniteLoss(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Logistic,
    Tanh,
    Relu,
}

impl Activation {
    pub const ALL: [Activation; 4] = [
        Activation::Identity,
        Activation::Logistic,
        Activation::Tanh,
        Activation::Relu,
    ];

    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Logistic => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Logistic => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 - s)
            }
            Activation::Tanh => 1.0 - z.tanh().powi(2),
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Learning-rate schedules, shared with the `sgd_linear` regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    Constant,
    InvScaling,
    Adaptive,
}

impl LrSchedule {
    pub const ALL: [LrSchedule; 3] = [
        LrSchedule::Constant,
        LrSchedule::InvScaling,
        LrSchedule::Adaptive,
    ];

    /// Numeric encoding used in parameter maps (0, 1, 2).
    pub fn from_code(code: u8) -> LrSchedule {
        match code {
            1 => LrSchedule::InvScaling,
            2 => LrSchedule::Adaptive,
            _ => LrSchedule::Constant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Adam,
    Lbfgs,
}

impl Solver {
    pub const ALL: [Solver; 2] = [Solver::Adam, Solver::Lbfgs];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub activation: Activation,
    pub lr_schedule: LrSchedule,
    pub solver: Solver,
    pub hidden_layers: Vec<usize>,
    pub seed: u64,
    pub max_epochs: usize,
    pub initial_lr: f64,
    pub tolerance: f64,
}

impl MlpConfig {
    pub fn new(
        activation: Activation,
        lr_schedule: LrSchedule,
        solver: Solver,
        hidden_layers: Vec<usize>,
        seed: u64,
    ) -> Self {
        MlpConfig {
            activation,
            lr_schedule,
            solver,
            hidden_layers,
            seed,
            max_epochs: 500,
            initial_lr: 1e-3,
            tolerance: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.hidden_layers.is_empty() {
            return Err(NnError::InvalidConfig("hidden_layers must be non-empty".into()));
        }
        if self.hidden_layers.iter().any(|&w| w == 0) {
            return Err(NnError::InvalidConfig("hidden layer width 0".into()));
        }
        if !(self.initial_lr > 0.0) {
            return Err(NnError::InvalidConfig("initial_lr must be positive".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(NnError::InvalidConfig("tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

/// One dense layer; weights are row-major `rows × cols` (out × in).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn forward(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for r in 0..self.rows {
            let row = &self.weights[r * self.cols..(r + 1) * self.cols];
            out.push(self.biases[r] + row.iter().zip(input).map(|(w, v)| w * v).sum::<f64>());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub config: MlpConfig,
    pub layers: Vec<Layer>,
    pub loss_history: Vec<f64>,
    pub lr_history: Vec<f64>,
    input_dim: usize,
}

impl Mlp {
    /// Glorot-uniform initialization, deterministic from the config seed;
    /// biases start at zero.
    pub fn init(config: MlpConfig, input_dim: usize) -> Result<Mlp, NnError> {
        config.validate()?;
        if input_dim == 0 {
            return Err(NnError::InvalidConfig("input_dim must be >= 1".into()));
        }
        let mut dims = vec![input_dim];
        dims.extend(&config.hidden_layers);
        dims.push(1);

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for win in dims.windows(2) {
            let (fan_in, fan_out) = (win[0], win[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weights = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-limit..limit))
                .collect();
            layers.push(Layer {
                rows: fan_out,
                cols: fan_in,
                weights,
                biases: vec![0.0; fan_out],
            });
        }
        Ok(Mlp {
            config,
            layers,
            loss_history: Vec::new(),
            lr_history: Vec::new(),
            input_dim,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Assemble a network from explicit layers (weights row-major,
    /// out × in), checking that the dimensions chain from `input_dim` to
    /// a scalar output.
    pub fn from_layers(config: MlpConfig, layers: Vec<Layer>, input_dim: usize) -> Result<Mlp, NnError> {
        config.validate()?;
        let mut expect = input_dim;
        for layer in &layers {
            if layer.cols != expect
                || layer.weights.len() != layer.rows * layer.cols
                || layer.biases.len() != layer.rows
            {
                return Err(NnError::InvalidConfig(format!(
                    "layer shape {}×{} does not chain from {expect} inputs",
                    layer.rows, layer.cols
                )));
            }
            expect = layer.rows;
        }
        if expect != 1 {
            return Err(NnError::InvalidConfig("output layer must be scalar".into()));
        }
        Ok(Mlp {
            config,
            layers,
            loss_history: Vec::new(),
            lr_history: Vec::new(),
            input_dim,
        })
    }

    /// Scalar output for one input row.
    pub fn forward(&self, x: &[f64]) -> Result<f64, NnError> {
        if x.len() != self.input_dim {
            return Err(NnError::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        let mut a = x.to_vec();
        let mut z = Vec::new();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            layer.forward(&a, &mut z);
            if l < last {
                a = z.iter().map(|&v| self.config.activation.apply(v)).collect();
            } else {
                a = z.clone();
            }
        }
        Ok(a[0])
    }

    /// `½·mean (ŷ − y)²` over a batch.
    pub fn loss(&self, x: &[Vec<f64>], y: &[f64]) -> Result<f64, NnError> {
        let mut acc = 0.0;
        for (row, &t) in x.iter().zip(y) {
            let e = self.forward(row)? - t;
            acc += e * e;
        }
        Ok(0.5 * acc / x.len().max(1) as f64)
    }

    /// Flattened parameters: per layer, weights row-major then biases.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.biases);
        }
        out
    }

    pub fn set_params_flat(&mut self, params: &[f64]) {
        let mut offset = 0;
        for layer in &mut self.layers {
            let nw = layer.weights.len();
            layer.weights.copy_from_slice(&params[offset..offset + nw]);
            offset += nw;
            let nb = layer.biases.len();
            layer.biases.copy_from_slice(&params[offset..offset + nb]);
            offset += nb;
        }
        debug_assert_eq!(offset, params.len());
    }

    /// Exact gradient of `½·mean (ŷ − y)²`, flattened like
    /// [`params_flat`].
    pub fn gradient(&self, x: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>, NnError> {
        if x.is_empty() {
            return Err(NnError::InvalidConfig("empty batch".into()));
        }
        let act = self.config.activation;
        let last = self.layers.len() - 1;
        let mut grad_w: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect();
        let mut grad_b: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect();
        let n = x.len() as f64;

        for (row, &target) in x.iter().zip(y) {
            if row.len() != self.input_dim {
                return Err(NnError::DimensionMismatch {
                    expected: self.input_dim,
                    got: row.len(),
                });
            }
            // forward with caches
            let mut activations: Vec<Vec<f64>> = vec![row.clone()];
            let mut pre: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
            for (l, layer) in self.layers.iter().enumerate() {
                let mut z = Vec::new();
                layer.forward(activations.last().unwrap(), &mut z);
                let a = if l < last {
                    z.iter().map(|&v| act.apply(v)).collect()
                } else {
                    z.clone()
                };
                pre.push(z);
                activations.push(a);
            }
            let output = activations.last().unwrap()[0];

            // backward
            let mut delta = vec![(output - target) / n];
            for l in (0..self.layers.len()).rev() {
                let input = &activations[l];
                for (r, &dr) in delta.iter().enumerate() {
                    grad_b[l][r] += dr;
                    let base = r * self.layers[l].cols;
                    for (c, &v) in input.iter().enumerate() {
                        grad_w[l][base + c] += dr * v;
                    }
                }
                if l > 0 {
                    let layer = &self.layers[l];
                    let mut next = vec![0.0; layer.cols];
                    for (r, &dr) in delta.iter().enumerate() {
                        let base = r * layer.cols;
                        for (c, slot) in next.iter_mut().enumerate() {
                            *slot += layer.weights[base + c] * dr;
                        }
                    }
                    for (c, slot) in next.iter_mut().enumerate() {
                        *slot *= act.derivative(pre[l - 1][c]);
                    }
                    delta = next;
                }
            }
        }

        let mut flat = Vec::new();
        for (gw, gb) in grad_w.into_iter().zip(grad_b) {
            flat.extend(gw);
            flat.extend(gb);
        }
        Ok(flat)
    }

    /// Smallest |pre-activation| over all hidden units of all rows; the
    /// gradient-verification harness uses this to avoid probing relu
    /// kinks with finite differences.
    pub fn min_abs_hidden_preactivation(&self, x: &[Vec<f64>]) -> f64 {
        let mut floor = f64::INFINITY;
        let last = self.layers.len() - 1;
        for row in x {
            let mut a = row.clone();
            let mut z = Vec::new();
            for (l, layer) in self.layers.iter().enumerate() {
                layer.forward(&a, &mut z);
                if l < last {
                    for &v in &z {
                        floor = floor.min(v.abs());
                    }
                    a = z.iter().map(|&v| self.config.activation.apply(v)).collect();
                } else {
                    break;
                }
            }
        }
        floor
    }

    /// Train in place with the configured solver; returns self for
    /// chaining. `max_epochs = 0` leaves the network untouched.
    pub fn train(mut self, x: &[Vec<f64>], y: &[f64]) -> Result<Mlp, NnError> {
        if x.is_empty() || x.len() != y.len() {
            return Err(NnError::InvalidConfig("training batch empty or misaligned".into()));
        }
        match self.config.solver {
            Solver::Adam => self.train_adam(x, y)?,
            Solver::Lbfgs => self.train_lbfgs(x, y)?,
        }
        Ok(self)
    }

    fn train_adam(&mut self, x: &[Vec<f64>], y: &[f64]) -> Result<(), NnError> {
        const BETA1: f64 = 0.9;
        const BETA2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        const NO_CHANGE_EPOCHS: u32 = 10;

        let n = x.len();
        let batch_size = n.min(32);
        let mut params = self.params_flat();
        let mut m = vec![0.0; params.len()];
        let mut v = vec![0.0; params.len()];
        let mut step = 0usize;

        let mut lr = self.config.initial_lr;
        let mut best_loss = f64::INFINITY;
        let mut stagnant_for_lr = 0u32;
        let mut stagnant_for_stop = 0u32;
        let mut order: Vec<usize> = (0..n).collect();

        for epoch in 0..self.config.max_epochs {
            lr = match self.config.lr_schedule {
                LrSchedule::Constant => self.config.initial_lr,
                LrSchedule::InvScaling => self.config.initial_lr * ((epoch + 1) as f64).powf(-0.5),
                LrSchedule::Adaptive => lr,
            };
            self.lr_history.push(lr);

            let mut rng =
                ChaCha8Rng::seed_from_u64(seeds::derive(self.config.seed, &[epoch as u64]));
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch_size) {
                let bx: Vec<Vec<f64>> = chunk.iter().map(|&i| x[i].clone()).collect();
                let by: Vec<f64> = chunk.iter().map(|&i| y[i]).collect();
                let grad = self.gradient(&bx, &by)?;
                step += 1;
                let bc1 = 1.0 - BETA1.powi(step as i32);
                let bc2 = 1.0 - BETA2.powi(step as i32);
                for i in 0..params.len() {
                    m[i] = BETA1 * m[i] + (1.0 - BETA1) * grad[i];
                    v[i] = BETA2 * v[i] + (1.0 - BETA2) * grad[i] * grad[i];
                    params[i] -= lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + EPS);
                }
                self.set_params_flat(&params);
            }

            let loss = self.loss(x, y)?;
            if !loss.is_finite() {
                return Err(NnError::NonFiniteLoss(epoch));
            }
            self.loss_history.push(loss);

            let improved = loss < best_loss - self.config.tolerance;
            if improved {
                stagnant_for_stop = 0;
            } else {
                stagnant_for_stop += 1;
            }
            if self.config.lr_schedule == LrSchedule::Adaptive {
                if improved {
                    stagnant_for_lr = 0;
                } else {
                    stagnant_for_lr += 1;
                    if stagnant_for_lr >= 2 {
                        lr *= 0.5;
                        stagnant_for_lr = 0;
                    }
                }
            }
            best_loss = best_loss.min(loss);
            if stagnant_for_stop >= NO_CHANGE_EPOCHS {
                break;
            }
        }
        Ok(())
    }

    fn train_lbfgs(&mut self, x: &[Vec<f64>], y: &[f64]) -> Result<(), NnError> {
        const MEMORY: usize = 10;

        let mut params = self.params_flat();
        let eval = |net: &mut Mlp, p: &[f64]| -> Result<(f64, Vec<f64>), NnError> {
            net.set_params_flat(p);
            let f = net.loss(x, y)?;
            let g = net.gradient(x, y)?;
            Ok((f, g))
        };

        let (mut f, mut g) = eval(self, &params)?;
        let mut pairs: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new(); // (s, y, 1/yᵀs)

        for iter in 0..self.config.max_epochs {
            if !f.is_finite() {
                return Err(NnError::NonFiniteLoss(iter));
            }
            self.loss_history.push(f);
            let gmax = g.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            if gmax < self.config.tolerance {
                break;
            }

            // two-loop recursion
            let mut direction: Vec<f64> = g.iter().map(|&v| -v).collect();
            let mut alphas = Vec::with_capacity(pairs.len());
            for (s, yv, rho) in pairs.iter().rev() {
                let alpha = rho * dot(s, &direction);
                for (d, &yi) in direction.iter_mut().zip(yv) {
                    *d -= alpha * yi;
                }
                alphas.push(alpha);
            }
            if let Some((s, yv, _)) = pairs.last() {
                let gamma = dot(s, yv) / dot(yv, yv).max(1e-300);
                for d in &mut direction {
                    *d *= gamma;
                }
            }
            for ((s, yv, rho), &alpha) in pairs.iter().zip(alphas.iter().rev()) {
                let beta = rho * dot(yv, &direction);
                for (d, &si) in direction.iter_mut().zip(s) {
                    *d += (alpha - beta) * si;
                }
            }

            let mut slope = dot(&g, &direction);
            if slope >= 0.0 {
                direction = g.iter().map(|&v| -v).collect();
                slope = dot(&g, &direction);
                pairs.clear();
            }

            let Some((alpha, f_new, g_new)) =
                strong_wolfe(self, &params, &direction, f, slope, &eval)?
            else {
                break; // no acceptable step; gradient is numerically flat
            };

            let new_params: Vec<f64> = params
                .iter()
                .zip(&direction)
                .map(|(p, d)| p + alpha * d)
                .collect();
            let s: Vec<f64> = new_params.iter().zip(&params).map(|(a, b)| a - b).collect();
            let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &yv);
            if sy > 1e-10 {
                if pairs.len() == MEMORY {
                    pairs.remove(0);
                }
                pairs.push((s, yv, 1.0 / sy));
            }

            let improvement = f - f_new;
            params = new_params;
            g = g_new;
            f = f_new;
            self.set_params_flat(&params);
            if improvement.abs() < self.config.tolerance {
                break;
            }
        }
        self.set_params_flat(&params);
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

type EvalFn<'a> = &'a dyn Fn(&mut Mlp, &[f64]) -> Result<(f64, Vec<f64>), NnError>;

/// Strong-Wolfe line search (c1 = 1e-4, c2 = 0.9) with bisection zoom.
/// Returns `(step, f, gradient)` at the accepted point, or None if no
/// acceptable step exists.
fn strong_wolfe(
    net: &mut Mlp,
    params: &[f64],
    direction: &[f64],
    f0: f64,
    slope0: f64,
    eval: EvalFn<'_>,
) -> Result<Option<(f64, f64, Vec<f64>)>, NnError> {
    const C1: f64 = 1e-4;
    const C2: f64 = 0.9;
    const MAX_BRACKET: usize = 20;
    const MAX_ZOOM: usize = 30;

    let phi = |net: &mut Mlp, alpha: f64| -> Result<(f64, f64, Vec<f64>), NnError> {
        let p: Vec<f64> = params
            .iter()
            .zip(direction)
            .map(|(p, d)| p + alpha * d)
            .collect();
        let (f, g) = eval(net, &p)?;
        let dphi = dot(&g, direction);
        Ok((f, dphi, g))
    };

    let mut alpha_prev = 0.0;
    let mut f_prev = f0;
    let mut alpha = 1.0;
    let mut bracket: Option<(f64, f64, f64, f64)> = None; // (lo, f_lo, hi, f_hi-ish)

    let mut result = None;
    for i in 0..MAX_BRACKET {
        let (fa, da, ga) = phi(net, alpha)?;
        if !fa.is_finite() || fa > f0 + C1 * alpha * slope0 || (i > 0 && fa >= f_prev) {
            bracket = Some((alpha_prev, f_prev, alpha, fa));
            break;
        }
        if da.abs() <= -C2 * slope0 {
            result = Some((alpha, fa, ga));
            break;
        }
        if da >= 0.0 {
            bracket = Some((alpha, fa, alpha_prev, f_prev));
            break;
        }
        alpha_prev = alpha;
        f_prev = fa;
        alpha *= 2.0;
    }

    if result.is_none() {
        if let Some((mut lo, mut f_lo, mut hi, _)) = bracket {
            for _ in 0..MAX_ZOOM {
                let mid = 0.5 * (lo + hi);
                let (fm, dm, gm) = phi(net, mid)?;
                if !fm.is_finite() || fm > f0 + C1 * mid * slope0 || fm >= f_lo {
                    hi = mid;
                } else {
                    if dm.abs() <= -C2 * slope0 {
                        result = Some((mid, fm, gm));
                        break;
                    }
                    if dm * (hi - lo) >= 0.0 {
                        hi = lo;
                    }
                    lo = mid;
                    f_lo = fm;
                }
                if (hi - lo).abs() < 1e-16 {
                    break;
                }
            }
            // fall back to the sufficient-decrease point if curvature
            // never tightened
            if result.is_none() && f_lo < f0 && lo > 0.0 {
                let (fl, _, gl) = phi(net, lo)?;
                result = Some((lo, fl, gl));
            }
        }
    }

    net.set_params_flat(params);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(
        activation: Activation,
        solver: Solver,
        hidden: &[usize],
        seed: u64,
    ) -> MlpConfig {
        MlpConfig::new(
            activation,
            LrSchedule::Constant,
            solver,
            hidden.to_vec(),
            seed,
        )
    }

    #[test]
    fn init_is_deterministic() {
        let c = config(Activation::Tanh, Solver::Adam, &[5, 3], 99);
        let a = Mlp::init(c.clone(), 4).unwrap();
        let b = Mlp::init(c, 4).unwrap();
        assert_eq!(a.params_flat(), b.params_flat());
    }

    #[test]
    fn init_rejects_empty_hidden() {
        let c = config(Activation::Relu, Solver::Adam, &[], 1);
        assert!(matches!(Mlp::init(c, 3), Err(NnError::InvalidConfig(_))));
    }

    #[test]
    fn init_shapes_chain() {
        let c = config(Activation::Identity, Solver::Adam, &[3], 0);
        let net = Mlp::init(c, 2).unwrap();
        assert_eq!((net.layers[0].cols, net.layers[0].rows), (2, 3));
        assert_eq!((net.layers[1].cols, net.layers[1].rows), (3, 1));
    }

    #[test]
    fn forward_hand_arithmetic() {
        let c = config(Activation::Identity, Solver::Adam, &[1], 0);
        let mut net = Mlp::init(c, 1).unwrap();
        net.set_params_flat(&[2.0, 1.0, 1.0, 0.0]); // w0=2 b0=1 w1=1 b1=0
        assert_eq!(net.forward(&[3.0]).unwrap(), 7.0);
    }

    #[test]
    fn relu_all_negative_gives_output_bias() {
        let c = config(Activation::Relu, Solver::Adam, &[2], 0);
        let mut net = Mlp::init(c, 1).unwrap();
        // hidden weights/biases all negative, output bias 0.25
        net.set_params_flat(&[-1.0, -2.0, -1.0, -1.0, 3.0, 4.0, 0.25]);
        assert_eq!(net.forward(&[2.0]).unwrap(), 0.25);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let c = config(Activation::Tanh, Solver::Adam, &[3], 0);
        let mut net = Mlp::init(c, 2).unwrap();
        let zeros = vec![0.0; net.params_flat().len()];
        net.set_params_flat(&zeros);
        assert_eq!(net.forward(&[0.3, -0.7]).unwrap(), 0.0);
    }

    #[test]
    fn gradient_zero_at_perfect_fit() {
        let c = config(Activation::Identity, Solver::Adam, &[1], 0);
        let mut net = Mlp::init(c, 1).unwrap();
        net.set_params_flat(&[1.0, 0.0, 1.0, 0.0]); // y = x
        let x = vec![vec![0.2], vec![0.8]];
        let y = vec![0.2, 0.8];
        let g = net.gradient(&x, &y).unwrap();
        assert!(g.iter().all(|&v| v.abs() < 1e-15), "{g:?}");
    }

    #[test]
    fn gradient_invariant_to_batch_duplication() {
        let c = config(Activation::Tanh, Solver::Adam, &[4], 3);
        let net = Mlp::init(c, 2).unwrap();
        let x = vec![vec![0.1, 0.9], vec![0.5, 0.4]];
        let y = vec![0.3, 0.7];
        let doubled_x: Vec<Vec<f64>> = x.iter().chain(x.iter()).cloned().collect();
        let doubled_y: Vec<f64> = y.iter().chain(y.iter()).cloned().collect();
        let g1 = net.gradient(&x, &y).unwrap();
        let g2 = net.gradient(&doubled_x, &doubled_y).unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    fn central_diff_gradient(net: &mut Mlp, x: &[Vec<f64>], y: &[f64], h: f64) -> Vec<f64> {
        let base = net.params_flat();
        let mut out = Vec::with_capacity(base.len());
        for i in 0..base.len() {
            let mut p = base.clone();
            p[i] = base[i] + h;
            net.set_params_flat(&p);
            let up = net.loss(x, y).unwrap();
            p[i] = base[i] - h;
            net.set_params_flat(&p);
            let down = net.loss(x, y).unwrap();
            out.push((up - down) / (2.0 * h));
        }
        net.set_params_flat(&base);
        out
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for (i, &activation) in Activation::ALL.iter().enumerate() {
            let c = config(activation, Solver::Adam, &[4, 3], 7 + i as u64);
            let mut net = Mlp::init(c, 3).unwrap();
            let x = vec![
                vec![0.2, 0.5, 0.8],
                vec![0.9, 0.1, 0.4],
                vec![0.3, 0.3, 0.6],
            ];
            let y = vec![0.4, 0.6, 0.1];
            if activation == Activation::Relu
                && net.min_abs_hidden_preactivation(&x) < 1e-3
            {
                continue; // finite differences would straddle a kink
            }
            let analytic = net.gradient(&x, &y).unwrap();
            let numeric = central_diff_gradient(&mut net, &x, &y, 1e-5);
            for (a, b) in analytic.iter().zip(&numeric) {
                let denom = a.abs().max(b.abs()).max(1e-6);
                assert!(
                    ((a - b).abs() / denom) < 1e-5,
                    "activation {activation:?}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn zero_epochs_leaves_network_unchanged() {
        let mut c = config(Activation::Tanh, Solver::Adam, &[4], 5);
        c.max_epochs = 0;
        let net = Mlp::init(c, 1).unwrap();
        let before = net.params_flat();
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec![0.0, 2.0];
        let trained = net.train(&x, &y).unwrap();
        assert_eq!(trained.params_flat(), before);
    }

    #[test]
    fn training_is_deterministic() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 40.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0]).collect();
        let mut c = config(Activation::Tanh, Solver::Adam, &[6], 11);
        c.max_epochs = 30;
        c.initial_lr = 0.01;
        let a = Mlp::init(c.clone(), 1).unwrap().train(&x, &y).unwrap();
        let b = Mlp::init(c, 1).unwrap().train(&x, &y).unwrap();
        assert_eq!(a.params_flat(), b.params_flat());
    }

    #[test]
    fn adaptive_lr_non_increasing() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 / 30.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| (6.0 * r[0]).sin()).collect();
        let mut c = MlpConfig::new(
            Activation::Tanh,
            LrSchedule::Adaptive,
            Solver::Adam,
            vec![6],
            2,
        );
        c.max_epochs = 120;
        c.initial_lr = 0.05;
        c.tolerance = 1e-9;
        let net = Mlp::init(c, 1).unwrap().train(&x, &y).unwrap();
        for pair in net.lr_history.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-15);
        }
    }

    #[test]
    fn serde_roundtrip() {
        let c = config(Activation::Logistic, Solver::Lbfgs, &[3, 2], 8);
        let net = Mlp::init(c, 2).unwrap();
        let json = serde_json::to_string(&net).unwrap();
        let back: Mlp = serde_json::from_str(&json).unwrap();
        assert_eq!(back, net);
    }
}
