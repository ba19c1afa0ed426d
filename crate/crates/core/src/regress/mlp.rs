use serde::{Deserialize, Serialize};

use super::{default_feature_names, fit as fit_any, Hyperparams, Init, Params, RegressorModel, RegressorSpec, TrainingSummary};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::SeededRng;

pub fn fit_mlp(x: &Matrix, y: &[f64], spec: &RegressorSpec) -> Result<RegressorModel> {
    if !matches!(spec.hyperparams, Hyperparams::Mlp { .. }) {
        return Err(Error::invalid("family", "expected mlp hyperparameters"));
    }
    fit_any(spec, x, y, &default_feature_names(x.cols()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// out x in
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Fully connected ReLU network with a single linear output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
}

impl Network {
    /// `sizes` = [inputs, hidden..., 1].
    pub fn new(sizes: &[usize], init: Init, rng: &mut SeededRng) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / fan_in.max(1) as f64).sqrt();
                let data = (0..fan_in * fan_out)
                    .map(|_| match init {
                        Init::HeUniform => rng.uniform_range(-limit, limit),
                        Init::Zero => 0.0,
                    })
                    .collect();
                Layer {
                    weights: Matrix::new(fan_out, fan_in, data).expect("layer shape"),
                    bias: vec![0.0; fan_out],
                }
            })
            .collect();
        Self { layers }
    }

    pub fn forward_row(&self, x: &[f64]) -> f64 {
        let mut a = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z: Vec<f64> = layer.bias.clone();
            for (o, zo) in z.iter_mut().enumerate() {
                *zo += crate::linalg::dot(layer.weights.row(o), &a);
            }
            if l < last {
                for v in &mut z {
                    *v = v.max(0.0);
                }
            }
            a = z;
        }
        a[0]
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.as_slice().len() + l.bias.len()).sum()
    }

    /// Weights row-major then bias, layer by layer.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, theta: &[f64]) {
        assert_eq!(theta.len(), self.n_params());
        let mut k = 0;
        for l in &mut self.layers {
            let (r, c) = (l.weights.rows(), l.weights.cols());
            for i in 0..r {
                l.weights.row_mut(i).copy_from_slice(&theta[k + i * c..k + (i + 1) * c]);
            }
            k += r * c;
            l.bias.copy_from_slice(&theta[k..k + r]);
            k += r;
        }
    }

    /// Loss (1/2m) sum e^2 over the given rows and its gradient in `params()` order.
    pub fn loss_and_gradient(&self, x: &Matrix, y: &[f64]) -> (f64, Vec<f64>) {
        let rows: Vec<usize> = (0..x.rows()).collect();
        let mut grad = vec![0.0; self.n_params()];
        let loss = self.accumulate(x, y, &rows, &mut grad);
        (loss, grad)
    }

    /// Adds the mean gradient over `rows` into `grad` (which must be zeroed) and returns the loss.
    fn accumulate(&self, x: &Matrix, y: &[f64], rows: &[usize], grad: &mut [f64]) -> f64 {
        let m = rows.len() as f64;
        let last = self.layers.len() - 1;
        let offsets: Vec<usize> = self
            .layers
            .iter()
            .scan(0, |k, l| {
                let o = *k;
                *k += l.weights.as_slice().len() + l.bias.len();
                Some(o)
            })
            .collect();
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        let mut loss = 0.0;
        for &i in rows {
            acts.clear();
            acts.push(x.row(i).to_vec());
            for (l, layer) in self.layers.iter().enumerate() {
                let a = &acts[l];
                let mut z = layer.bias.clone();
                for (o, zo) in z.iter_mut().enumerate() {
                    *zo += crate::linalg::dot(layer.weights.row(o), a);
                }
                if l < last {
                    for v in &mut z {
                        *v = v.max(0.0);
                    }
                }
                acts.push(z);
            }
            let e = acts[last + 1][0] - y[i];
            loss += e * e;

            let mut delta = vec![e / m];
            for l in (0..=last).rev() {
                let layer = &self.layers[l];
                let a_in = &acts[l];
                let (r, c) = (layer.weights.rows(), layer.weights.cols());
                let off = offsets[l];
                for o in 0..r {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    let g = &mut grad[off + o * c..off + (o + 1) * c];
                    for (gj, aj) in g.iter_mut().zip(a_in) {
                        *gj += d * aj;
                    }
                    grad[off + r * c + o] += d;
                }
                if l > 0 {
                    let mut prev = vec![0.0; c];
                    for o in 0..r {
                        let d = delta[o];
                        if d != 0.0 {
                            for (pj, wj) in prev.iter_mut().zip(layer.weights.row(o)) {
                                *pj += d * wj;
                            }
                        }
                    }
                    // ReLU derivative, taken as 0 at the kink
                    for (pj, aj) in prev.iter_mut().zip(a_in) {
                        if *aj <= 0.0 {
                            *pj = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }
        loss / (2.0 * m)
    }
}

/// Plain mini-batch gradient descent on a standardized target. Losses in the
/// summary are in standardized units.
pub(super) fn fit(x: &Matrix, y: &[f64], spec: &RegressorSpec) -> Result<(Params, TrainingSummary)> {
    let Hyperparams::Mlp { hidden_layers, learning_rate, epochs, batch_size, init } = &spec.hyperparams else {
        unreachable!()
    };
    let n = y.len();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let sd = (y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let y_std = if sd > 0.0 { sd } else { 1.0 };
    let ys: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_std).collect();

    let mut sizes = vec![x.cols()];
    sizes.extend_from_slice(hidden_layers);
    sizes.push(1);
    let mut rng = SeededRng::new(spec.seed);
    let mut net = Network::new(&sizes, *init, &mut rng);
    let mut theta = net.params();
    let mut grad = vec![0.0; theta.len()];
    let mut order: Vec<usize> = (0..n).collect();
    let all: Vec<usize> = (0..n).collect();
    // trace[0] is the loss at initialization
    let mut trace = Vec::with_capacity(*epochs + 1);
    trace.push(net.accumulate(x, &ys, &all, &mut grad));

    for epoch in 1..=*epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(*batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            net.accumulate(x, &ys, batch, &mut grad);
            for (t, g) in theta.iter_mut().zip(&grad) {
                *t -= learning_rate * g;
            }
            net.set_params(&theta);
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        let loss = net.accumulate(x, &ys, &all, &mut grad);
        if !loss.is_finite() || theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        trace.push(loss);
    }
    Ok((
        Params::Mlp {
            network: net,
            y_mean,
            y_std,
        },
        TrainingSummary {
            final_loss: *trace.last().unwrap(),
            iterations: *epochs,
            loss_trace: trace,
        },
    ))
}
