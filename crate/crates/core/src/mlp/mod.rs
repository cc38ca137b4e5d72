//! Fully connected feedforward network with logistic activations, trained by
//! per-pattern backpropagation with a momentum term.
//!
//! Layer `0` is the input layer and carries no parameters. Every other layer
//! `i` owns a row-major weight matrix of shape `(sizes[i], sizes[i - 1])` and
//! a bias vector of length `sizes[i]`. All arithmetic is `f64`.

mod backprop;
mod document;
mod gradcheck;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use backprop::{apply_update, backprop_deltas, Deltas, MomentumState};
pub use document::NetworkDocument;
pub use gradcheck::{grad_check, GradCheckReport, ABS_FLOOR};
pub use train::{train, Sample, TrainConfig, TrainReport};

/// Logistic sigmoid `1 / (1 + e^-v)`.
#[inline]
pub fn activate(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Derivative of the sigmoid, written in terms of its output `y = activate(v)`.
#[inline]
pub fn activate_derivative(y: f64) -> f64 {
    y * (1.0 - y)
}

/// Half the sum of squared residuals.
pub fn loss(output: &[f64], target: &[f64]) -> Result<f64> {
    if output.len() != target.len() {
        return Err(Error::dim("loss", target.len(), output.len()));
    }
    Ok(0.5
        * output
            .iter()
            .zip(target)
            .map(|(y, t)| (t - y) * (t - y))
            .sum::<f64>())
}

/// One parameterised layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    /// Row-major `(outputs, inputs)` weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    #[inline]
    pub fn weight(&self, to: usize, from: usize) -> f64 {
        self.weights[to * self.inputs + from]
    }

    fn row(&self, to: usize) -> &[f64] {
        &self.weights[to * self.inputs..(to + 1) * self.inputs]
    }
}

/// Hyper-parameters of the most recent training run, carried with the model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    sizes: Vec<usize>,
    layers: Vec<Layer>,
    seed: u64,
    meta: TrainingMeta,
}

fn check_topology(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 3 {
        return Err(Error::InvalidTopology(format!(
            "need at least 3 layers, got {}",
            sizes.len()
        )));
    }
    if let Some(i) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::InvalidTopology(format!(
            "layer {i} has zero neurons"
        )));
    }
    Ok(())
}

impl Network {
    /// Random initialisation: weights uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`,
    /// biases zero.
    pub fn new(sizes: &[usize], seed: u64) -> Result<Self> {
        check_topology(sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let r = 1.0 / (inputs as f64).sqrt();
                let weights = (0..inputs * outputs)
                    .map(|_| rng.random_range(-r..=r))
                    .collect();
                Layer {
                    inputs,
                    outputs,
                    weights,
                    biases: vec![0.0; outputs],
                }
            })
            .collect();
        Ok(Self {
            sizes: sizes.to_vec(),
            layers,
            seed,
            meta: TrainingMeta::default(),
        })
    }

    /// Builds a network from explicit row-major weights and biases.
    pub fn from_parts(
        sizes: &[usize],
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
        seed: u64,
    ) -> Result<Self> {
        check_topology(sizes)?;
        let n = sizes.len() - 1;
        if weights.len() != n {
            return Err(Error::dim("weight layers", n, weights.len()));
        }
        if biases.len() != n {
            return Err(Error::dim("bias layers", n, biases.len()));
        }
        let mut layers = Vec::with_capacity(n);
        for (i, (w, b)) in weights.into_iter().zip(biases).enumerate() {
            let (inputs, outputs) = (sizes[i], sizes[i + 1]);
            if w.len() != inputs * outputs {
                return Err(Error::dim("weight matrix", inputs * outputs, w.len()));
            }
            if b.len() != outputs {
                return Err(Error::dim("bias vector", outputs, b.len()));
            }
            if w.iter().chain(&b).any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "layer {} has non-finite parameters",
                    i + 1
                )));
            }
            layers.push(Layer {
                inputs,
                outputs,
                weights: w,
                biases: b,
            });
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            layers,
            seed,
            meta: TrainingMeta::default(),
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn meta(&self) -> TrainingMeta {
        self.meta
    }

    pub fn set_meta(&mut self, meta: TrainingMeta) {
        self.meta = meta;
    }

    pub fn input_width(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_width(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|x| x.is_finite()))
    }

    pub fn forward(&self, input: &[f64]) -> Result<ForwardTrace> {
        let mut trace = ForwardTrace::for_network(self);
        self.forward_into(input, &mut trace)?;
        Ok(trace)
    }

    /// Forward pass reusing a trace buffer shaped for this network.
    pub fn forward_into(&self, input: &[f64], trace: &mut ForwardTrace) -> Result<()> {
        if input.len() != self.input_width() {
            return Err(Error::dim("network input", self.input_width(), input.len()));
        }
        if !trace.matches(self) {
            return Err(Error::dim(
                "forward trace",
                self.sizes.len(),
                trace.activations.len(),
            ));
        }
        trace.activations[0].copy_from_slice(input);
        for (i, layer) in self.layers.iter().enumerate() {
            let (before, after) = trace.activations.split_at_mut(i + 1);
            let prev = &before[i];
            let out = &mut after[0];
            let fields = &mut trace.fields[i];
            for k in 0..layer.outputs {
                let v = layer
                    .row(k)
                    .iter()
                    .zip(prev.iter())
                    .map(|(w, y)| w * y)
                    .sum::<f64>()
                    + layer.biases[k];
                fields[k] = v;
                out[k] = activate(v);
            }
        }
        Ok(())
    }

    /// Output activations only.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(input)?.output().to_vec())
    }
}

/// Local fields and activations of every layer for one input pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    /// `fields[i]` holds the local fields of parameterised layer `i + 1`.
    fields: Vec<Vec<f64>>,
    /// `activations[0]` is the input; `activations[i]` is layer `i`'s output.
    activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn for_network(net: &Network) -> Self {
        Self {
            fields: net.sizes[1..].iter().map(|&s| vec![0.0; s]).collect(),
            activations: net.sizes.iter().map(|&s| vec![0.0; s]).collect(),
        }
    }

    fn matches(&self, net: &Network) -> bool {
        self.activations.len() == net.sizes.len()
            && self
                .activations
                .iter()
                .zip(&net.sizes)
                .all(|(a, &s)| a.len() == s)
    }

    pub fn fields(&self) -> &[Vec<f64>] {
        &self.fields
    }

    pub fn activations(&self) -> &[Vec<f64>] {
        &self.activations
    }

    pub fn output(&self) -> &[f64] {
        self.activations.last().unwrap()
    }
}
