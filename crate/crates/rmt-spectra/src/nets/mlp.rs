//! Fully connected ReLU networks with a flat parameter vector.
//!
//! Parameters are stored layer-major: for each affine layer, the weight
//! matrix in row-major order (one row per output neuron) followed by
//! the bias vector. Hidden layers apply ReLU; the final layer is
//! linear, with the loss semantics chosen by the output head.

use crate::ensembles::RngSeed;
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Loss attached to the linear network output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputHead {
    /// Per-datum squared error `|f(x) - y|^2`, averaged over the batch.
    SquaredError,
    /// Per-datum `-log softmax(f(x))[y]`, averaged over the batch.
    SoftmaxCrossEntropy,
}

/// Architecture of a multilayer perceptron.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    layer_widths: Vec<usize>,
    head: OutputHead,
}

impl MlpSpec {
    /// `layer_widths` lists input, hidden, and output widths in order;
    /// at least input and output are required and every width must be
    /// positive. A softmax head needs at least two output classes.
    pub fn new(layer_widths: Vec<usize>, head: OutputHead) -> Result<Self> {
        if layer_widths.len() < 2 {
            return Err(Error::validation(format!(
                "an MLP needs at least input and output widths, got {:?}",
                layer_widths
            )));
        }
        if layer_widths.iter().any(|&w| w == 0) {
            return Err(Error::validation(format!(
                "layer widths must be positive, got {:?}",
                layer_widths
            )));
        }
        if head == OutputHead::SoftmaxCrossEntropy && *layer_widths.last().unwrap() < 2 {
            return Err(Error::validation(
                "a softmax head needs at least 2 output classes",
            ));
        }
        Ok(MlpSpec { layer_widths, head })
    }

    #[must_use]
    pub fn layer_widths(&self) -> &[usize] {
        &self.layer_widths
    }

    #[must_use]
    pub fn head(&self) -> OutputHead {
        self.head
    }

    /// Number of affine layers.
    #[must_use]
    pub fn n_layers(&self) -> usize {
        self.layer_widths.len() - 1
    }

    #[must_use]
    pub fn input_dim(&self) -> usize {
        self.layer_widths[0]
    }

    #[must_use]
    pub fn output_dim(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }

    /// Total number of trainable parameters (weights and biases).
    #[must_use]
    pub fn param_count(&self) -> usize {
        self.layer_widths
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    /// Offsets of layer `l` inside the flat parameter vector:
    /// `(weight_start, bias_start, fan_in, fan_out)`; the weight block
    /// has length `fan_in * fan_out` and the bias block `fan_out`.
    #[must_use]
    pub(crate) fn layer_offsets(&self, layer: usize) -> (usize, usize, usize, usize) {
        let mut offset = 0;
        for l in 0..layer {
            let (fan_in, fan_out) = (self.layer_widths[l], self.layer_widths[l + 1]);
            offset += fan_in * fan_out + fan_out;
        }
        let (fan_in, fan_out) = (self.layer_widths[layer], self.layer_widths[layer + 1]);
        (offset, offset + fan_in * fan_out, fan_in, fan_out)
    }

}

/// Flat parameter vector of an [`MlpSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    flat: Vec<f64>,
}

impl Weights {
    #[must_use]
    pub fn zeros(spec: &MlpSpec) -> Self {
        Weights {
            flat: vec![0.0; spec.param_count()],
        }
    }

    /// Wraps an existing flat vector, checking length and finiteness.
    pub fn from_flat(spec: &MlpSpec, flat: Vec<f64>) -> Result<Self> {
        if flat.len() != spec.param_count() {
            return Err(Error::dimension(format!(
                "flat parameter vector has length {}, architecture needs {}",
                flat.len(),
                spec.param_count()
            )));
        }
        if !flat.iter().all(|v| v.is_finite()) {
            return Err(Error::validation("parameters must be finite"));
        }
        Ok(Weights { flat })
    }

    #[must_use]
    pub fn as_slice(&self) -> &[f64] {
        &self.flat
    }

    #[must_use]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.flat
    }

    #[must_use]
    pub fn into_flat(self) -> Vec<f64> {
        self.flat
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.flat.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }
}

/// Kaiming-uniform initialization: weights uniform on
/// `[-sqrt(6 / fan_in), sqrt(6 / fan_in)]` per layer, biases zero.
/// Draws happen layer by layer in storage order, so the result is a
/// pure function of the architecture and seed.
#[must_use]
pub fn init_weights(spec: &MlpSpec, seed: RngSeed) -> Weights {
    let mut rng = seed.rng();
    let mut w = Weights::zeros(spec);
    for layer in 0..spec.n_layers() {
        let (w_start, b_start, fan_in, _) = spec.layer_offsets(layer);
        let bound = (6.0 / fan_in as f64).sqrt();
        for slot in &mut w.flat[w_start..b_start] {
            *slot = rng.random_range(-bound..=bound);
        }
    }
    w
}

/// Network output (pre-head) for a single input.
pub fn forward(spec: &MlpSpec, weights: &Weights, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != spec.input_dim() {
        return Err(Error::dimension(format!(
            "input has length {}, architecture expects {}",
            x.len(),
            spec.input_dim()
        )));
    }
    if weights.len() != spec.param_count() {
        return Err(Error::dimension(
            "weight vector does not match the architecture",
        ));
    }
    let flat = weights.as_slice();
    let mut activation = x.to_vec();
    for layer in 0..spec.n_layers() {
        let (w_start, b_start, fan_in, fan_out) = spec.layer_offsets(layer);
        let mut z = vec![0.0; fan_out];
        for j in 0..fan_out {
            let row = &flat[w_start + j * fan_in..w_start + (j + 1) * fan_in];
            let mut acc = flat[b_start + j];
            for (wv, av) in row.iter().zip(&activation) {
                acc += wv * av;
            }
            z[j] = acc;
        }
        if layer + 1 < spec.n_layers() {
            for v in &mut z {
                *v = v.max(0.0);
            }
        }
        activation = z;
    }
    Ok(activation)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_count_matches_hand_tally() {
        let spec = MlpSpec::new(vec![13, 100, 100, 50, 1], OutputHead::SquaredError).unwrap();
        assert_eq!(
            spec.param_count(),
            13 * 100 + 100 + 100 * 100 + 100 + 100 * 50 + 50 + 50 * 1 + 1
        );
        assert_eq!(spec.param_count(), 16_601);

        let desk = MlpSpec::new(vec![13, 32, 16, 1], OutputHead::SquaredError).unwrap();
        assert_eq!(desk.param_count(), 13 * 32 + 32 + 32 * 16 + 16 + 16 + 1);
        assert_eq!(desk.param_count(), 993);
    }

    #[test]
    fn layer_offsets_partition_the_flat_vector() {
        let spec = MlpSpec::new(vec![3, 5, 2], OutputHead::SquaredError).unwrap();
        let (w0, b0, in0, out0) = spec.layer_offsets(0);
        assert_eq!((w0, b0, in0, out0), (0, 15, 3, 5));
        let (w1, b1, in1, out1) = spec.layer_offsets(1);
        assert_eq!((w1, b1, in1, out1), (20, 30, 5, 2));
        assert_eq!(b1 + out1, spec.param_count());
    }

    #[test]
    fn forward_matches_hand_computation() {
        // 2 -> 2 -> 1 with known weights:
        // W0 = [[1, -1], [2, 0]], b0 = [0.5, -3], W1 = [[1, 1]], b1 = [0.25].
        let spec = MlpSpec::new(vec![2, 2, 1], OutputHead::SquaredError).unwrap();
        let flat = vec![1.0, -1.0, 2.0, 0.0, 0.5, -3.0, 1.0, 1.0, 0.25];
        let w = Weights::from_flat(&spec, flat).unwrap();
        // x = (1, 2): z0 = (1 - 2 + 0.5, 2 - 3) = (-0.5, -1), relu -> (0, 0),
        // output 0 + 0 + 0.25.
        let out = forward(&spec, &w, &[1.0, 2.0]).unwrap();
        assert_eq!(out, vec![0.25]);
        // x = (3, 0): z0 = (3.5, 3), relu passes both, output 6.5 + 0.25.
        let out = forward(&spec, &w, &[3.0, 0.0]).unwrap();
        assert_eq!(out, vec![6.75]);
    }

    #[test]
    fn initialization_respects_kaiming_bounds_and_zero_biases() {
        let spec = MlpSpec::new(vec![13, 32, 16, 1], OutputHead::SquaredError).unwrap();
        let w = init_weights(&spec, RngSeed(4));
        for layer in 0..spec.n_layers() {
            let (w_start, b_start, fan_in, fan_out) = spec.layer_offsets(layer);
            let bound = (6.0 / fan_in as f64).sqrt();
            let weights = &w.as_slice()[w_start..b_start];
            assert!(weights.iter().all(|v| v.abs() <= bound));
            // A uniform draw fills a decent part of the interval.
            let max_abs = weights.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(max_abs > 0.5 * bound, "layer {layer} draws look degenerate");
            assert!(w.as_slice()[b_start..b_start + fan_out]
                .iter()
                .all(|&b| b == 0.0));
        }
        // Determinism in the seed.
        assert_eq!(w, init_weights(&spec, RngSeed(4)));
        assert_ne!(w, init_weights(&spec, RngSeed(5)));
    }

    #[test]
    fn spec_validation() {
        assert!(MlpSpec::new(vec![5], OutputHead::SquaredError).is_err());
        assert!(MlpSpec::new(vec![5, 0, 2], OutputHead::SquaredError).is_err());
        assert!(MlpSpec::new(vec![5, 1], OutputHead::SoftmaxCrossEntropy).is_err());
        assert!(MlpSpec::new(vec![5, 2], OutputHead::SoftmaxCrossEntropy).is_ok());

        let spec = MlpSpec::new(vec![3, 2], OutputHead::SquaredError).unwrap();
        assert!(Weights::from_flat(&spec, vec![0.0; 7]).is_err());
        assert!(Weights::from_flat(&spec, vec![f64::NAN; 8]).is_err());
        assert!(forward(&spec, &Weights::zeros(&spec), &[1.0, 2.0]).is_err());
    }
}
