//! Derivative-free minimizers used by the model-fitting code: Nelder–Mead
//! simplex descent and golden-section line search. Both are deterministic.

/// Result of a [`nelder_mead`] run.
#[derive(Debug, Clone)]
pub(crate) struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Standard Nelder–Mead with reflection/expansion/contraction/shrink
/// coefficients (1, 2, 0.5, 0.5).
///
/// The initial simplex perturbs each coordinate of `x0` by `step`. The
/// returned point is always the best vertex seen, so its value never
/// exceeds `f(x0)`.
pub(crate) fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_iter: usize,
    tol: f64,
) -> SimplexResult {
    let n = x0.len();
    if n == 0 {
        return SimplexResult {
            x: Vec::new(),
            value: f(x0),
        };
    }

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if v[i] == 0.0 { step } else { step * v[i].abs().max(1.0) };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    for _ in 0..max_iter {

        // order best..worst; stable under ties
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
        let reorder_simplex: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
        let reorder_values: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        simplex = reorder_simplex;
        values = reorder_values;

        let spread = values[n] - values[0];
        let size: f64 = (0..n)
            .map(|j| {
                simplex
                    .iter()
                    .map(|v| (v[j] - simplex[0][j]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread.abs() <= tol && size <= tol.sqrt() {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let mix = |alpha: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + alpha * (c - w))
                .collect()
        };

        let reflected = mix(1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = mix(2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            let contracted = if fr < values[n] { mix(0.5) } else { mix(-0.5) };
            let fc = f(&contracted);
            if fc < values[n].min(fr) {
                simplex[n] = contracted;
                values[n] = fc;
            } else {
                // shrink toward the best vertex
                for i in 1..=n {
                    for j in 0..n {
                        simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)))
        .unwrap();
    SimplexResult {
        x: simplex[best].clone(),
        value: values[best],
    }
}

/// Golden-section minimum of a unimodal `f` on [lo, hi].
pub(crate) fn golden_section(f: impl Fn(f64) -> f64, lo: f64, hi: f64, iters: usize) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_minimizes_quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2);
        let r = nelder_mead(f, &[0.0, 0.0], 0.5, 500, 1e-14);
        assert!((r.x[0] - 3.0).abs() < 1e-5, "{:?}", r.x);
        assert!((r.x[1] + 1.0).abs() < 1e-5, "{:?}", r.x);
    }

    #[test]
    fn simplex_never_worse_than_start() {
        let f = |x: &[f64]| x[0].powi(4) - x[0] + x[1] * x[1];
        let start = [1.3, -0.7];
        let r = nelder_mead(f, &start, 0.1, 200, 1e-12);
        assert!(r.value <= f(&start));
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let x = golden_section(|x| (x - 1.25).powi(2), 0.0, 2.0, 80);
        assert!((x - 1.25).abs() < 1e-9);
    }
}
