#![allow(clippy::needless_range_loop)]

use super::{activate_derivative, ForwardTrace, Network};
use crate::error::{Error, Result};

/// Error signals for every parameterised layer; `Deltas[i]` belongs to layer `i + 1`.
pub type Deltas = Vec<Vec<f64>>;

/// Error signals for one pattern, computed from the pre-update weights.
///
/// Output layer: `(t_k - y_k) * y_k (1 - y_k)`. Hidden layer `i`:
/// `(sum_j delta_j^{i+1} W_{j,k}^{i+1}) * y_k (1 - y_k)`. With this sign the
/// increment `alpha * delta * y` descends the squared error.
pub fn backprop_deltas(net: &Network, trace: &ForwardTrace, target: &[f64]) -> Result<Deltas> {
    let mut deltas: Deltas = net.layer_sizes()[1..]
        .iter()
        .map(|&s| vec![0.0; s])
        .collect();
    backprop_into(net, trace, target, &mut deltas)?;
    Ok(deltas)
}

pub(crate) fn backprop_into(
    net: &Network,
    trace: &ForwardTrace,
    target: &[f64],
    deltas: &mut Deltas,
) -> Result<()> {
    let sizes = net.layer_sizes();
    let acts = trace.activations();
    if acts.len() != sizes.len() || acts.iter().zip(sizes).any(|(a, &s)| a.len() != s) {
        return Err(Error::dim("forward trace", sizes.len(), acts.len()));
    }
    if target.len() != net.output_width() {
        return Err(Error::dim("target", net.output_width(), target.len()));
    }
    let last = deltas.len() - 1;
    for ((d, &t), &y) in deltas[last].iter_mut().zip(target).zip(trace.output()) {
        *d = (t - y) * activate_derivative(y);
    }
    let layers = net.layers();
    for i in (0..last).rev() {
        let (lower, upper) = deltas.split_at_mut(i + 1);
        let next = &upper[0];
        let next_layer = &layers[i + 1];
        let y = &acts[i + 1];
        for (k, d) in lower[i].iter_mut().enumerate() {
            let back: f64 = next
                .iter()
                .enumerate()
                .map(|(j, dj)| dj * next_layer.weight(j, k))
                .sum();
            *d = back * activate_derivative(y[k]);
        }
    }
    Ok(())
}

/// The previous total change applied to every weight and bias, zero before
/// the first update.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumState {
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl MomentumState {
    pub fn new(net: &Network) -> Self {
        Self {
            weights: net
                .layers()
                .iter()
                .map(|l| vec![0.0; l.weights().len()])
                .collect(),
            biases: net
                .layers()
                .iter()
                .map(|l| vec![0.0; l.biases().len()])
                .collect(),
        }
    }

    pub fn weight_steps(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn bias_steps(&self) -> &[Vec<f64>] {
        &self.biases
    }

    fn matches(&self, net: &Network) -> bool {
        self.weights.len() == net.layers().len()
            && net.layers().iter().enumerate().all(|(i, l)| {
                self.weights[i].len() == l.weights().len()
                    && self.biases[i].len() == l.biases().len()
            })
    }
}

/// Applies `W += alpha * delta * y_prev + beta * previous_step` to every
/// weight (and the analogous rule to biases), recording the applied step.
pub fn apply_update(
    net: &mut Network,
    deltas: &Deltas,
    trace: &ForwardTrace,
    alpha: f64,
    beta: f64,
    momentum: &mut MomentumState,
) -> Result<()> {
    if !momentum.matches(net) {
        return Err(Error::dim(
            "momentum state",
            net.layers().len(),
            momentum.weights.len(),
        ));
    }
    if deltas.len() != net.layers().len() {
        return Err(Error::dim("deltas", net.layers().len(), deltas.len()));
    }
    let acts = trace.activations();
    for (i, layer) in net.layers_mut().iter_mut().enumerate() {
        let (n_in, n_out) = (layer.inputs(), layer.outputs());
        if deltas[i].len() != n_out {
            return Err(Error::dim("delta vector", n_out, deltas[i].len()));
        }
        if acts.get(i).map(Vec::len) != Some(n_in) {
            return Err(Error::dim(
                "trace activations",
                n_in,
                acts.get(i).map_or(0, Vec::len),
            ));
        }
        let y_prev = &acts[i];
        let w_steps = &mut momentum.weights[i];
        let weights = layer.weights_mut();
        for k in 0..n_out {
            let g = alpha * deltas[i][k];
            let row = k * n_in;
            for j in 0..n_in {
                let step = g * y_prev[j] + beta * w_steps[row + j];
                weights[row + j] += step;
                w_steps[row + j] = step;
            }
        }
        let b_steps = &mut momentum.biases[i];
        for ((b, s), d) in layer
            .biases_mut()
            .iter_mut()
            .zip(b_steps.iter_mut())
            .zip(&deltas[i])
        {
            let step = alpha * d + beta * *s;
            *b += step;
            *s = step;
        }
    }
    Ok(())
}
