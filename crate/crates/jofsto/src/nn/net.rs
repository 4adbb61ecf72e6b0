//! Dense feed-forward network with cached forward passes and reverse-mode
//! gradients. Weights are row-major `(out_dim, in_dim)` so both the forward
//! dot products and the backward accumulations run over contiguous slices.

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, Matrix};
use crate::nn::Activation;
use crate::scalar::Scalar;
use rand::distributions::{Distribution, Uniform};
use rand::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    pub weights: Matrix<T>, // (out_dim, in_dim)
    pub biases: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseNet<T> {
    layer_dims: Vec<usize>,
    layers: Vec<Layer<T>>,
    hidden_activation: Activation,
    output_activation: Activation,
}

/// Per-layer activations kept from a forward pass; entry 0 is the input,
/// entry `L` the network output.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    layer_dims: Vec<usize>,
    activations: Vec<Matrix<T>>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn output(&self) -> &Matrix<T> {
        self.activations.last().expect("cache has activations")
    }
}

/// Parameter gradients, shaped exactly like the network's layers.
#[derive(Clone, Debug)]
pub struct Gradients<T> {
    pub weights: Vec<Matrix<T>>,
    pub biases: Vec<Vec<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(net: &DenseNet<T>) -> Self {
        Gradients {
            weights: net
                .layers
                .iter()
                .map(|l| Matrix::zeros(l.weights.rows(), l.weights.cols()))
                .collect(),
            biases: net.layers.iter().map(|l| vec![T::zero(); l.biases.len()]).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().all(|w| w.all_finite())
            && self.biases.iter().flatten().all(|b| b.is_finite())
    }

    pub fn all_zero(&self) -> bool {
        self.weights
            .iter()
            .all(|w| w.data().iter().all(|&v| v == T::zero()))
            && self.biases.iter().flatten().all(|&b| b == T::zero())
    }
}

impl<T: Scalar> DenseNet<T> {
    /// Builds a network with the given layer widths. Hidden layers use ReLU;
    /// the output activation is caller-chosen. Weights and biases draw from
    /// a fan-in-scaled uniform `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn new<R: Rng + ?Sized>(
        layer_dims: &[usize],
        output_activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::config("a network needs at least input and output widths"));
        }
        if layer_dims.contains(&0) {
            return Err(Error::config("layer widths must be positive"));
        }
        let mut layers = Vec::with_capacity(layer_dims.len() - 1);
        for w in layer_dims.windows(2) {
            let (in_dim, out_dim) = (w[0], w[1]);
            let bound = 1.0 / (in_dim as f64).sqrt();
            let dist = Uniform::new(-bound, bound);
            let mut weights = Matrix::zeros(out_dim, in_dim);
            for v in weights.data_mut() {
                *v = T::from_f64(dist.sample(rng));
            }
            let biases = (0..out_dim).map(|_| T::from_f64(dist.sample(rng))).collect();
            layers.push(Layer { weights, biases });
        }
        Ok(DenseNet {
            layer_dims: layer_dims.to_vec(),
            layers,
            hidden_activation: Activation::Relu,
            output_activation,
        })
    }

    /// Assembles a network from explicit layers (used by tests and the
    /// checkpoint loader). Validates the dimension chain.
    pub fn from_layers(layers: Vec<Layer<T>>, output_activation: Activation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("a network needs at least one layer"));
        }
        let mut layer_dims = vec![layers[0].weights.cols()];
        for l in &layers {
            if l.weights.cols() != *layer_dims.last().unwrap() {
                return Err(Error::config("consecutive layer dims do not chain"));
            }
            if l.biases.len() != l.weights.rows() {
                return Err(Error::config("bias length does not match layer width"));
            }
            layer_dims.push(l.weights.rows());
        }
        Ok(DenseNet {
            layer_dims,
            layers,
            hidden_activation: Activation::Relu,
            output_activation,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
    }

    pub fn output_activation(&self) -> Activation {
        self.output_activation
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.data().len() + l.biases.len())
            .sum()
    }

    pub fn params_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.all_finite() && l.biases.iter().all(|b| b.is_finite()))
    }

    /// FNV-1a over the parameter bit patterns; equal fingerprints on equal
    /// parameter bits. Used to assert bit-level determinism and frozen nets.
    pub fn param_fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut mix = |bits: u64| {
            for byte in bits.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        for l in &self.layers {
            for &v in l.weights.data() {
                mix(v.to_bits_u64());
            }
            for &v in &l.biases {
                mix(v.to_bits_u64());
            }
        }
        h
    }

    fn activation_for(&self, layer_index: usize) -> Activation {
        if layer_index + 1 == self.layers.len() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    /// Forward pass over a batch, retaining per-layer activations for a
    /// subsequent backward pass.
    pub fn forward(&self, inputs: &Matrix<T>) -> Result<(Matrix<T>, ForwardCache<T>)> {
        if inputs.cols() != self.input_dim() {
            return Err(Error::shape(
                "forward inputs",
                format!("{} columns", self.input_dim()),
                format!("{} columns", inputs.cols()),
            ));
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(inputs.clone());
        for (li, layer) in self.layers.iter().enumerate() {
            let act = self.activation_for(li);
            let prev = activations.last().unwrap();
            let out_dim = layer.weights.rows();
            let mut out = Matrix::zeros(prev.rows(), out_dim);
            for r in 0..prev.rows() {
                let x = prev.row(r);
                let out_row = out.row_mut(r);
                for (o, out_v) in out_row.iter_mut().enumerate() {
                    let z = layer.biases[o] + dot(x, layer.weights.row(o));
                    *out_v = act.apply(z);
                }
            }
            activations.push(out);
        }
        let outputs = activations.last().unwrap().clone();
        Ok((
            outputs,
            ForwardCache {
                layer_dims: self.layer_dims.clone(),
                activations,
            },
        ))
    }

    /// Forward pass without keeping the cache.
    pub fn predict(&self, inputs: &Matrix<T>) -> Result<Matrix<T>> {
        Ok(self.forward(inputs)?.0)
    }

    /// Reverse-mode pass. `output_grad` is dL/d(outputs); returns parameter
    /// gradients plus dL/d(inputs), which the joint graph needs to route the
    /// task network's gradient into the score path.
    pub fn backward(
        &self,
        cache: &ForwardCache<T>,
        output_grad: &Matrix<T>,
    ) -> Result<(Gradients<T>, Matrix<T>)> {
        if cache.layer_dims != self.layer_dims || cache.activations.len() != self.layers.len() + 1 {
            return Err(Error::shape(
                "backward cache",
                format!("{:?}", self.layer_dims),
                format!("{:?}", cache.layer_dims),
            ));
        }
        let batch = cache.activations[0].rows();
        output_grad.require_shape("backward output_grad", batch, self.output_dim())?;

        let mut grads = Gradients::zeros_like(self);
        let mut delta = output_grad.clone(); // dL/d(activations of current layer)
        for li in (0..self.layers.len()).rev() {
            let act = self.activation_for(li);
            let layer = &self.layers[li];
            let x = &cache.activations[li];
            let y = &cache.activations[li + 1];
            let in_dim = layer.weights.cols();

            let mut next_delta = Matrix::zeros(batch, in_dim);
            let dw = &mut grads.weights[li];
            let db = &mut grads.biases[li];
            for r in 0..batch {
                let x_row = x.row(r);
                let y_row = y.row(r);
                let d_row = delta.row(r);
                for o in 0..layer.weights.rows() {
                    let dz = d_row[o] * act.grad_from_output(y_row[o]);
                    if dz == T::zero() {
                        continue;
                    }
                    db[o] += dz;
                    axpy(dz, x_row, dw.row_mut(o));
                    axpy(dz, layer.weights.row(o), next_delta.row_mut(r));
                }
            }
            delta = next_delta;
        }
        Ok((grads, delta))
    }
}
