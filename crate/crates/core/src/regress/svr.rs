use super::{default_feature_names, fit as fit_any, Hyperparams, Kernel, Params, RegressorModel, RegressorSpec, TrainingSummary};
use crate::error::{Error, Result};
use crate::linalg::{dot, squared_distance, Matrix};
use crate::rng::SeededRng;

/// Largest training set accepted by the rbf kernel (explicit n x n kernel matrix).
pub const KERNEL_ROW_LIMIT: usize = 5000;

const STEP0: f64 = 0.05;

pub fn fit_svr(x: &Matrix, y: &[f64], spec: &RegressorSpec) -> Result<RegressorModel> {
    if !matches!(spec.hyperparams, Hyperparams::Svr { .. }) {
        return Err(Error::invalid("family", "expected svr hyperparameters"));
    }
    fit_any(spec, x, y, &default_feature_names(x.cols()))
}

pub(super) fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * squared_distance(a, b)).exp()
}

fn eps_loss(r: f64, eps: f64) -> f64 {
    (r.abs() - eps).max(0.0)
}

/// Epsilon-insensitive regression with L2 penalty, fitted in standardized-target
/// space: minimise lambda/2 ||w||^2 + mean(max(0, |y - f| - eps)) with
/// lambda = 1 / (C n), the per-sample form of 1/2 ||w||^2 + C sum loss.
pub(super) fn fit(x: &Matrix, y: &[f64], spec: &RegressorSpec) -> Result<(Params, TrainingSummary)> {
    let Hyperparams::Svr { epsilon, c, kernel, gamma, epochs } = spec.hyperparams else {
        unreachable!()
    };
    let n = y.len();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let sd = (y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let y_std = if sd > 0.0 { sd } else { 1.0 };
    let ys: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_std).collect();
    let eps = epsilon / y_std;
    let lambda = 1.0 / (c * n as f64);

    match kernel {
        Kernel::Linear => Ok(linear(x, &ys, eps, lambda, epochs, spec.seed, y_mean, y_std)),
        Kernel::Rbf => {
            if n > KERNEL_ROW_LIMIT {
                return Err(Error::KernelTooLarge {
                    n,
                    limit: KERNEL_ROW_LIMIT,
                });
            }
            Ok(kernelized(x, &ys, eps, lambda, gamma, epochs, y_mean, y_std))
        }
    }
}

/// Seeded stochastic subgradient descent with step STEP0/sqrt(epoch) and
/// iterate averaging over the second half of the epochs.
#[allow(clippy::too_many_arguments)]
fn linear(
    x: &Matrix,
    ys: &[f64],
    eps: f64,
    lambda: f64,
    epochs: usize,
    seed: u64,
    y_mean: f64,
    y_std: f64,
) -> (Params, TrainingSummary) {
    let (n, p) = (x.rows(), x.cols());
    let mut rng = SeededRng::new(seed);
    let mut w = vec![0.0; p];
    let mut b = 0.0;
    let mut w_avg = vec![0.0; p];
    let mut b_avg = 0.0;
    let mut averaged = 0usize;
    let mut order: Vec<usize> = (0..n).collect();
    let objective = |w: &[f64], b: f64| {
        0.5 * lambda * dot(w, w) + (0..n).map(|i| eps_loss(ys[i] - b - dot(w, x.row(i)), eps)).sum::<f64>() / n as f64
    };
    let mut trace = Vec::with_capacity(epochs);

    for epoch in 1..=epochs {
        let step = STEP0 / (epoch as f64).sqrt();
        rng.shuffle(&mut order);
        for &i in &order {
            let xi = x.row(i);
            let r = ys[i] - b - dot(&w, xi);
            let shrink = 1.0 - step * lambda;
            for wj in &mut w {
                *wj *= shrink;
            }
            if r.abs() > eps {
                let s = step * r.signum();
                for (wj, xj) in w.iter_mut().zip(xi) {
                    *wj += s * xj;
                }
                b += s;
            }
        }
        if 2 * epoch > epochs {
            averaged += 1;
            let k = averaged as f64;
            for (a, v) in w_avg.iter_mut().zip(&w) {
                *a += (v - *a) / k;
            }
            b_avg += (b - b_avg) / k;
        }
        trace.push(objective(&w, b));
    }
    let final_loss = objective(&w_avg, b_avg);
    (
        Params::Linear {
            coef: w_avg.iter().map(|v| v * y_std).collect(),
            intercept: y_mean + b_avg * y_std,
        },
        TrainingSummary {
            final_loss,
            iterations: epochs,
            loss_trace: trace,
        },
    )
}

/// Full-batch functional subgradient descent on f = K alpha + b.
#[allow(clippy::too_many_arguments)]
fn kernelized(
    x: &Matrix,
    ys: &[f64],
    eps: f64,
    lambda: f64,
    gamma: f64,
    epochs: usize,
    y_mean: f64,
    y_std: f64,
) -> (Params, TrainingSummary) {
    let n = x.rows();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = rbf(x.row(i), x.row(j), gamma);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    let mut alpha = vec![0.0; n];
    let mut b = 0.0;
    let mut f = vec![0.0; n];
    let mut trace = Vec::with_capacity(epochs);
    for t in 1..=epochs {
        let step = 1.0 / (t as f64).sqrt();
        let s: Vec<f64> = (0..n)
            .map(|i| {
                let r = ys[i] - f[i];
                if r.abs() > eps {
                    r.signum()
                } else {
                    0.0
                }
            })
            .collect();
        let shrink = 1.0 - step * lambda;
        for (a, si) in alpha.iter_mut().zip(&s) {
            *a = *a * shrink + step * si / n as f64;
        }
        b += step * s.iter().sum::<f64>() / n as f64;
        for i in 0..n {
            f[i] = b + dot(k.row(i), &alpha);
        }
        let penalty: f64 = 0.5 * lambda * (0..n).map(|i| alpha[i] * (f[i] - b)).sum::<f64>();
        trace.push(penalty + (0..n).map(|i| eps_loss(ys[i] - f[i], eps)).sum::<f64>() / n as f64);
    }
    (
        Params::KernelSvr {
            support: x.clone(),
            alpha,
            intercept: b,
            gamma,
            y_mean,
            y_std,
        },
        TrainingSummary {
            final_loss: *trace.last().unwrap(),
            iterations: epochs,
            loss_trace: trace,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(epsilon: f64, c: f64, kernel: Kernel, epochs: usize) -> RegressorSpec {
        RegressorSpec::new(
            Hyperparams::Svr {
                epsilon,
                c,
                kernel,
                gamma: 1.0,
                epochs,
            },
            3,
        )
    }

    fn grid(n: usize) -> Matrix {
        let rows: Vec<[f64; 1]> = (0..n).map(|i| [2.0 * i as f64 / (n - 1) as f64 - 1.0]).collect();
        Matrix::from_rows(&rows)
    }

    #[test]
    fn constant_target_inside_tube() {
        let x = grid(10);
        let m = fit_svr(&x, &[4.0; 10], &spec(0.1, 1.0, Kernel::Linear, 20)).unwrap();
        let p = m.predict(&x).unwrap();
        let mae = p.iter().map(|v| (v - 4.0).abs()).sum::<f64>() / 10.0;
        assert!(mae <= 0.1);
        assert_eq!(m.training_summary.final_loss, 0.0);
    }

    #[test]
    fn noiseless_line_slope() {
        let x = grid(50);
        let y: Vec<f64> = (0..50).map(|i| 2.0 * x[(i, 0)]).collect();
        let m = fit_svr(&x, &y, &spec(0.01, 1e4, Kernel::Linear, 200)).unwrap();
        let Params::Linear { coef, .. } = &m.params else { unreachable!() };
        assert!((coef[0] - 2.0).abs() < 0.1, "slope {}", coef[0]);
    }

    #[test]
    fn wide_tube_gives_zero_loss() {
        let x = grid(10);
        let y: Vec<f64> = (0..10).map(|i| x[(i, 0)]).collect();
        let m = fit_svr(&x, &y, &spec(5.0, 1.0, Kernel::Linear, 10)).unwrap();
        assert_eq!(m.training_summary.final_loss, 0.0);
    }

    #[test]
    fn rbf_fits_a_curve() {
        let x = grid(30);
        let y: Vec<f64> = (0..30).map(|i| (3.0 * x[(i, 0)]).sin()).collect();
        let m = fit_svr(&x, &y, &spec(0.05, 100.0, Kernel::Rbf, 300)).unwrap();
        let t = &m.training_summary.loss_trace;
        assert!(t.last().unwrap() < &t[0]);
    }

    #[test]
    fn c_must_be_positive() {
        let x = grid(4);
        assert!(fit_svr(&x, &[1.0, 2.0, 3.0, 4.0], &spec(0.1, 0.0, Kernel::Linear, 5)).is_err());
    }
}
