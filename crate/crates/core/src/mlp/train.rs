use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::backprop::backprop_into;
use super::{apply_update, loss, Deltas, ForwardTrace, MomentumState, Network, TrainingMeta};
use crate::error::{Error, Result};

/// One `(input, target)` training pattern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

impl Sample {
    pub fn new(input: Vec<f64>, target: Vec<f64>) -> Self {
        Self { input, target }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            momentum: 0.1,
            epochs: 10_000,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.learning_rate) {
            return Err(Error::InvalidInput(format!(
                "learning rate {} outside [0, 1]",
                self.learning_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.momentum) {
            return Err(Error::InvalidInput(format!(
                "momentum {} outside [0, 1]",
                self.momentum
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidInput("epochs must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    /// Mean per-pattern error of each epoch, measured before each pattern's update.
    pub loss_history: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> Option<f64> {
        self.loss_history.last().copied()
    }
}

/// Online training: every epoch visits all patterns once (in a freshly
/// shuffled order when enabled) and updates after each one.
pub fn train(net: &mut Network, data: &[Sample], config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    for s in data {
        if s.input.len() != net.input_width() {
            return Err(Error::dim(
                "training input",
                net.input_width(),
                s.input.len(),
            ));
        }
        if s.target.len() != net.output_width() {
            return Err(Error::dim(
                "training target",
                net.output_width(),
                s.target.len(),
            ));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut trace = ForwardTrace::for_network(net);
    let mut deltas: Deltas = net.layer_sizes()[1..]
        .iter()
        .map(|&s| vec![0.0; s])
        .collect();
    let mut momentum = MomentumState::new(net);
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for &idx in &order {
            let sample = &data[idx];
            net.forward_into(&sample.input, &mut trace)?;
            total += loss(trace.output(), &sample.target)?;
            backprop_into(net, &trace, &sample.target, &mut deltas)?;
            apply_update(
                net,
                &deltas,
                &trace,
                config.learning_rate,
                config.momentum,
                &mut momentum,
            )?;
        }
        let mean = total / data.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.push(mean);
    }

    let prior = net.meta();
    net.set_meta(TrainingMeta {
        epochs: prior.epochs + config.epochs,
        alpha: config.learning_rate,
        beta: config.momentum,
    });
    Ok(TrainReport {
        loss_history: history,
    })
}
