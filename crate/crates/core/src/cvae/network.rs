//! Dense multilayer perceptron with cached forward pass and manual backprop.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
}

impl Activation {
    fn apply<T: Scalar>(self, v: T) -> T {
        match self {
            Activation::Tanh => v.tanh(),
            Activation::Relu => v.max(T::zero()),
        }
    }

    /// Derivative expressed through the pre-activation value.
    fn derivative<T: Scalar>(self, pre: T) -> T {
        match self {
            Activation::Tanh => {
                let t = pre.tanh();
                T::one() - t * t
            }
            Activation::Relu => {
                if pre > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }
}

/// Fully connected layer; `weights` is `outputs x inputs`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![T::zero(); inputs * outputs],
            bias: vec![T::zero(); outputs],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let mut layer = Self::zeros(inputs, outputs);
        for w in &mut layer.weights {
            *w = T::lit(rng.random_range(-limit..limit));
        }
        layer
    }

    fn forward(&self, input: &[T]) -> Vec<T> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, &b)| row.iter().zip(input).fold(b, |acc, (&w, &x)| acc + w * x))
            .collect()
    }
}

/// Hidden layers use `activation`; the last layer is linear.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp<T> {
    pub layers: Vec<Dense<T>>,
    pub activation: Activation,
}

/// Layer inputs and pre-activations recorded by a forward pass.
pub(crate) struct Trace<T> {
    inputs: Vec<Vec<T>>,
    pre: Vec<Vec<T>>,
}

impl<T: Scalar> Mlp<T> {
    /// Layer widths `sizes[0] -> sizes[1] -> ... -> sizes[n]`.
    pub fn new(sizes: &[usize], activation: Activation, rng: &mut impl Rng) -> Self {
        Mlp {
            layers: sizes.windows(2).map(|w| Dense::glorot(w[0], w[1], rng)).collect(),
            activation,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Mlp {
            layers: self.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect(),
            activation: self.activation,
        }
    }

    pub fn input_len(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_len(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub(crate) fn check_shapes(&self, name: &str) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidModel(format!("{name} has no layers")));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::InvalidModel(format!("{name} layer {i} has inconsistent shape")));
            }
            if i > 0 && self.layers[i - 1].outputs != l.inputs {
                return Err(Error::InvalidModel(format!("{name} layer {i} input width mismatch")));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "{name} layer {i} has non-finite parameters"
                )));
            }
        }
        Ok(())
    }

    pub fn forward(&self, input: &[T], network: &'static str) -> Result<Vec<T>> {
        self.forward_trace(input, network).map(|(out, _)| out)
    }

    pub(crate) fn forward_trace(&self, input: &[T], network: &'static str) -> Result<(Vec<T>, Trace<T>)> {
        if input.len() != self.input_len() {
            return Err(Error::ShapeMismatch(format!(
                "{network} expects {} inputs, got {}",
                self.input_len(),
                input.len()
            )));
        }
        let last = self.layers.len() - 1;
        let mut trace = Trace {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
        };
        let mut act = input.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let pre = layer.forward(&act);
            if pre.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteActivation { network, layer: i });
            }
            let next = if i == last {
                pre.clone()
            } else {
                pre.iter().map(|&v| self.activation.apply(v)).collect()
            };
            trace.inputs.push(std::mem::replace(&mut act, next));
            trace.pre.push(pre);
        }
        Ok((act, trace))
    }

    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// with respect to the network input.
    pub(crate) fn backward(&self, trace: &Trace<T>, grad_out: &[T], grads: &mut Mlp<T>) -> Vec<T> {
        let last = self.layers.len() - 1;
        let mut g = grad_out.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            if i != last {
                for (gv, &p) in g.iter_mut().zip(&trace.pre[i]) {
                    *gv = *gv * self.activation.derivative(p);
                }
            }
            let input = &trace.inputs[i];
            let acc = &mut grads.layers[i];
            let mut grad_in = vec![T::zero(); layer.inputs];
            for (o, &go) in g.iter().enumerate() {
                acc.bias[o] = acc.bias[o] + go;
                let row = o * layer.inputs;
                for (j, &x) in input.iter().enumerate() {
                    acc.weights[row + j] = acc.weights[row + j] + go * x;
                    grad_in[j] = grad_in[j] + layer.weights[row + j] * go;
                }
            }
            g = grad_in;
        }
        g
    }

    /// Parameter slices in a fixed order: per layer, weights then bias.
    pub(crate) fn params(&self) -> impl Iterator<Item = &[T]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = &mut Vec<T>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.weights, &mut l.bias])
    }

    pub(crate) fn param_names(&self, network: &str) -> Vec<String> {
        (0..self.layers.len())
            .flat_map(|i| {
                [
                    format!("{network}.layer{i}.weights"),
                    format!("{network}.layer{i}.bias"),
                ]
            })
            .collect()
    }
}
