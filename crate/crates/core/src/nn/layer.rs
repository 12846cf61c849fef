use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// Fully connected layer. `weights` is row-major `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    inputs: usize,
    outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(
        inputs: usize,
        outputs: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if weights.len() != inputs * outputs {
            return Err(Error::DimensionMismatch {
                context: "layer weights",
                expected: inputs * outputs,
                got: weights.len(),
            });
        }
        if bias.len() != outputs {
            return Err(Error::DimensionMismatch {
                context: "layer bias",
                expected: outputs,
                got: bias.len(),
            });
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("layer parameters"));
        }
        Ok(Self {
            inputs,
            outputs,
            weights,
            bias,
            activation,
        })
    }

    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            activation,
        }
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn forward_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.inputs)
                .zip(&self.bias)
                .map(|(row, b)| {
                    let s: f64 = row.iter().zip(x).map(|(w, x)| w * x).sum();
                    self.activation.apply(s + b)
                }),
        );
    }
}

/// Cached per-layer inputs and outputs from one forward pass.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    inputs: Vec<Vec<f64>>,
    outputs: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> Option<&[f64]> {
        self.outputs.last().map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Gradients for every layer, laid out like the network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradient {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights
                .iter_mut()
                .zip(&b.weights)
                .for_each(|(a, b)| *a += b);
            a.bias.iter_mut().zip(&b.bias).for_each(|(a, b)| *a += b);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weights
                .iter_mut()
                .chain(l.bias.iter_mut())
                .for_each(|v| *v *= s);
        }
    }

    /// Flattened in the same order as [`Network::params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.flatten_into(&mut out);
        out
    }

    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|&v| v == 0.0))
    }
}

/// A stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<DenseLayer>,
}

impl Network {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::DimensionMismatch {
                    context: "layer chain",
                    expected: pair[0].outputs,
                    got: pair[1].inputs,
                });
            }
        }
        Ok(Self { layers })
    }

    /// Glorot-initialized network with the given widths; `hidden` activation on
    /// every layer except the last, which uses `head`.
    pub fn glorot<R: Rng + ?Sized>(
        widths: &[usize],
        hidden: Activation,
        head: Activation,
        rng: &mut R,
    ) -> Self {
        let n = widths.len().saturating_sub(1);
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i + 1 == n { head } else { hidden };
                DenseLayer::glorot(w[0], w[1], act, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// All parameters flattened layer by layer (weights, then bias).
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Inverse of [`params`](Self::params).
    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                context: "parameter vector",
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let mut rest = params;
        for l in &mut self.layers {
            let (w, r) = rest.split_at(l.weights.len());
            l.weights.copy_from_slice(w);
            let (b, r) = r.split_at(l.bias.len());
            l.bias.copy_from_slice(b);
            rest = r;
        }
        Ok(())
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        Ok(())
    }

    /// Forward pass recording a tape for [`backward`](Self::backward).
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, Tape)> {
        self.check_input(input)?;
        let mut tape = Tape {
            inputs: Vec::with_capacity(self.layers.len()),
            outputs: Vec::with_capacity(self.layers.len()),
        };
        let mut x = input.to_vec();
        for layer in &self.layers {
            let mut y = Vec::with_capacity(layer.outputs);
            layer.forward_into(&x, &mut y);
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("forward pass"));
            }
            tape.inputs.push(x);
            x = y.clone();
            tape.outputs.push(y);
        }
        Ok((x, tape))
    }

    /// Forward pass without a tape.
    pub fn infer(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut x = input.to_vec();
        let mut y = Vec::new();
        for layer in &self.layers {
            layer.forward_into(&x, &mut y);
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("forward pass"));
            }
            std::mem::swap(&mut x, &mut y);
        }
        Ok(x)
    }

    /// Reverse-mode gradients of a scalar loss whose gradient with respect to
    /// the network output is `output_gradient`. Returns parameter gradients and
    /// the gradient with respect to the input.
    pub fn backward(&self, tape: &Tape, output_gradient: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        let mut grads = Gradients::zeros_like(self);
        let input_grad = self.backward_accumulate(tape, output_gradient, &mut grads)?;
        Ok((grads, input_grad))
    }

    /// Like [`backward`](Self::backward) but adds into existing gradients.
    pub fn backward_accumulate(
        &self,
        tape: &Tape,
        output_gradient: &[f64],
        grads: &mut Gradients,
    ) -> Result<Vec<f64>> {
        if tape.outputs.len() != self.layers.len() {
            return Err(Error::DimensionMismatch {
                context: "tape layers",
                expected: self.layers.len(),
                got: tape.outputs.len(),
            });
        }
        if output_gradient.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                context: "output gradient",
                expected: self.output_dim(),
                got: output_gradient.len(),
            });
        }
        let mut upstream = output_gradient.to_vec();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let x = &tape.inputs[idx];
            let y = &tape.outputs[idx];
            if x.len() != layer.inputs || y.len() != layer.outputs {
                return Err(Error::DimensionMismatch {
                    context: "tape activations",
                    expected: layer.inputs,
                    got: x.len(),
                });
            }
            let delta: Vec<f64> = upstream
                .iter()
                .zip(y)
                .map(|(g, &y)| g * layer.activation.derivative_from_output(y))
                .collect();
            let g = &mut grads.layers[idx];
            let mut down = vec![0.0; layer.inputs];
            for (o, &d) in delta.iter().enumerate() {
                g.bias[o] += d;
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                let grow = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for i in 0..layer.inputs {
                    grow[i] += d * x[i];
                    down[i] += d * row[i];
                }
            }
            upstream = down;
        }
        Ok(upstream)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradient_check;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_layer_passes_input_through() {
        let mut l = DenseLayer::zeros(3, 3, Activation::Identity);
        for i in 0..3 {
            l.weights[i * 3 + i] = 1.0;
        }
        let net = Network::new(vec![l]).unwrap();
        let (y, _) = net.forward(&[1.5, -2.0, 0.25]).unwrap();
        assert_eq!(y, vec![1.5, -2.0, 0.25]);
    }

    #[test]
    fn scalar_affine_hand_arithmetic() {
        let l = DenseLayer::new(1, 1, vec![2.0], vec![1.0], Activation::Identity).unwrap();
        let net = Network::new(vec![l]).unwrap();
        assert_eq!(net.forward(&[3.0]).unwrap().0, vec![7.0]);
    }

    #[test]
    fn two_layer_relu_matches_hand_computation() {
        // W1 = [[1,-1],[2,0.5],[-1,-1]], b1 = [0, -1, 0.5]
        // W2 = [[1, 2, 3]], b2 = [0.25]
        let l1 = DenseLayer::new(
            2,
            3,
            vec![1.0, -1.0, 2.0, 0.5, -1.0, -1.0],
            vec![0.0, -1.0, 0.5],
            Activation::Relu,
        )
        .unwrap();
        let l2 =
            DenseLayer::new(3, 1, vec![1.0, 2.0, 3.0], vec![0.25], Activation::Identity).unwrap();
        let net = Network::new(vec![l1, l2]).unwrap();
        // x = [1, 2]: pre = [-1, 2.0, -2.5] -> relu [0, 2, 0]; out = 4.25
        assert_eq!(net.forward(&[1.0, 2.0]).unwrap().0, vec![4.25]);
        // x = [3, -1]: pre = [4, 4.5, -1.5] -> [4, 4.5, 0]; out = 4 + 9 + 0.25
        assert_eq!(net.infer(&[3.0, -1.0]).unwrap(), vec![13.25]);
    }

    #[test]
    fn dimension_and_finiteness_errors() {
        let net = Network::new(vec![DenseLayer::zeros(2, 2, Activation::Identity)]).unwrap();
        assert!(matches!(
            net.forward(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let big = DenseLayer::new(1, 1, vec![1e308], vec![0.0], Activation::Identity).unwrap();
        let big2 = DenseLayer::new(1, 1, vec![1e308], vec![0.0], Activation::Identity).unwrap();
        let net = Network::new(vec![big, big2]).unwrap();
        assert!(matches!(net.forward(&[10.0]), Err(Error::NonFinite(_))));
        assert!(Network::new(vec![
            DenseLayer::zeros(2, 3, Activation::Relu),
            DenseLayer::zeros(2, 1, Activation::Relu)
        ])
        .is_err());
    }

    #[test]
    fn linear_layer_gradient_is_outer_product() {
        let l =
            DenseLayer::new(3, 1, vec![0.5, -1.0, 2.0], vec![0.1], Activation::Identity).unwrap();
        let net = Network::new(vec![l]).unwrap();
        let x = [1.0, 2.0, -3.0];
        let (_, tape) = net.forward(&x).unwrap();
        let (g, dx) = net.backward(&tape, &[1.0]).unwrap();
        assert_eq!(g.layers[0].weights, x.to_vec());
        assert_eq!(g.layers[0].bias, vec![1.0]);
        assert_eq!(dx, vec![0.5, -1.0, 2.0]);
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Network::glorot(&[4, 5, 3], Activation::Tanh, Activation::Identity, &mut rng);
        let (_, tape) = net.forward(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let (g, dx) = net.backward(&tape, &[0.0; 3]).unwrap();
        assert!(g.is_zero());
        assert!(dx.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tape_shape_mismatch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Network::glorot(&[2, 3, 1], Activation::Relu, Activation::Identity, &mut rng);
        let b = Network::glorot(&[2, 1], Activation::Relu, Activation::Identity, &mut rng);
        let (_, tape) = a.forward(&[1.0, 1.0]).unwrap();
        assert!(b.backward(&tape, &[1.0]).is_err());
        assert!(a.backward(&tape, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn params_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = Network::glorot(&[3, 4, 2], Activation::Relu, Activation::Identity, &mut rng);
        let p = net.params();
        assert_eq!(p.len(), 3 * 4 + 4 + 4 * 2 + 2);
        let shifted: Vec<f64> = p.iter().map(|v| v + 1.0).collect();
        net.set_params(&shifted).unwrap();
        assert_eq!(net.params(), shifted);
        assert!(net.set_params(&p[1..]).is_err());
    }

    #[test]
    fn glorot_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let l = DenseLayer::glorot(75, 64, Activation::Relu, &mut rng);
        let limit = (6.0f64 / 139.0).sqrt();
        assert!(l.weights.iter().all(|w| w.abs() <= limit));
        assert!(l.bias.iter().all(|&b| b == 0.0));
    }

    fn loss_and_grad(net: &Network, x: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
        let (y, tape) = net.forward(x).unwrap();
        let loss: f64 = y
            .iter()
            .zip(target)
            .map(|(y, t)| 0.5 * (y - t).powi(2))
            .sum();
        let dy: Vec<f64> = y.iter().zip(target).map(|(y, t)| y - t).collect();
        let (g, _) = net.backward(&tape, &dy).unwrap();
        (loss, g.flatten())
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn backward_matches_finite_differences(seed in 0u64..10_000, act in 0usize..3) {
            let act = [Activation::Identity, Activation::Relu, Activation::Tanh][act];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let net = Network::glorot(&[4, 6, 5, 3], act, Activation::Identity, &mut rng);
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let target: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let params = net.params();
            let err = gradient_check(
                |p: &[f64]| {
                    let mut n = net.clone();
                    n.set_params(p).unwrap();
                    loss_and_grad(&n, &x, &target)
                },
                &params,
                params.len(),
                1e-5,
            );
            proptest::prop_assert!(err < 1e-4, "relative error {}", err);
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = Network::glorot(&[3, 4, 2], Activation::Tanh, Activation::Identity, &mut rng);
        let x = [0.3, -0.7, 0.2];
        let (_, tape) = net.forward(&x).unwrap();
        let (_, dx) = net.backward(&tape, &[1.0, 1.0]).unwrap();
        for i in 0..3 {
            let f = |d: f64| {
                let mut xp = x;
                xp[i] += d;
                net.infer(&xp).unwrap().iter().sum::<f64>()
            };
            let fd = (f(1e-5) - f(-1e-5)) / 2e-5;
            assert_relative_eq!(dx[i], fd, max_relative = 1e-6);
        }
    }
}
