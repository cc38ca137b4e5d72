#![allow(clippy::needless_range_loop)]

use super::{backprop_deltas, loss, Network};
use crate::error::Result;

/// Absolute differences below this are treated as agreement.
pub const ABS_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GradCheckReport {
    /// Largest relative error over parameters whose absolute error exceeds [`ABS_FLOOR`].
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
    pub parameters: usize,
}

/// Compares backpropagated gradients with central differences
/// `(E(p + h) - E(p - h)) / 2h` for every weight and bias.
pub fn grad_check(net: &Network, input: &[f64], target: &[f64], h: f64) -> Result<GradCheckReport> {
    let trace = net.forward(input)?;
    let deltas = backprop_deltas(net, &trace, target)?;
    let mut probe = net.clone();
    let mut report = GradCheckReport::default();

    let error_at = |probe: &Network| -> Result<f64> { loss(&probe.predict(input)?, target) };

    for i in 0..net.layers().len() {
        let layer = &net.layers()[i];
        let (n_in, n_out) = (layer.inputs(), layer.outputs());
        for k in 0..n_out {
            for j in 0..n_in + 1 {
                // j == n_in addresses the bias
                let analytic = if j < n_in {
                    -deltas[i][k] * trace.activations()[i][j]
                } else {
                    -deltas[i][k]
                };
                let original = if j < n_in {
                    layer.weight(k, j)
                } else {
                    layer.biases()[k]
                };
                let set = |p: &mut Network, v: f64| {
                    let l = &mut p.layers_mut()[i];
                    if j < n_in {
                        l.weights_mut()[k * n_in + j] = v;
                    } else {
                        l.biases_mut()[k] = v;
                    }
                };
                set(&mut probe, original + h);
                let plus = error_at(&probe)?;
                set(&mut probe, original - h);
                let minus = error_at(&probe)?;
                set(&mut probe, original);
                let numeric = (plus - minus) / (2.0 * h);

                let abs = (analytic - numeric).abs();
                report.max_absolute_error = report.max_absolute_error.max(abs);
                if abs > ABS_FLOOR {
                    let rel = abs / analytic.abs().max(numeric.abs());
                    report.max_relative_error = report.max_relative_error.max(rel);
                }
                report.parameters += 1;
            }
        }
    }
    Ok(report)
}
