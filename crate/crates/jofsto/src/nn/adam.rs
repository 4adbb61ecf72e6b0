//! Adam optimizer with bias correction. One state per network; moment
//! buffers mirror the parameter shapes exactly.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{DenseNet, Gradients};
use crate::scalar::Scalar;

pub const DEFAULT_LEARNING_RATE: f64 = 1e-4;
pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct AdamState<T> {
    first_moment_w: Vec<Matrix<T>>,
    second_moment_w: Vec<Matrix<T>>,
    first_moment_b: Vec<Vec<T>>,
    second_moment_b: Vec<Vec<T>>,
    step_count: u64,
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(net: &DenseNet<T>, learning_rate: f64) -> Self {
        let zeros = Gradients::zeros_like(net);
        AdamState {
            first_moment_w: zeros.weights.clone(),
            second_moment_w: zeros.weights,
            first_moment_b: zeros.biases.clone(),
            second_moment_b: zeros.biases,
            step_count: 0,
            learning_rate: T::from_f64(learning_rate),
            beta1: T::from_f64(DEFAULT_BETA1),
            beta2: T::from_f64(DEFAULT_BETA2),
            epsilon: T::from_f64(DEFAULT_EPSILON),
        }
    }

    pub fn with_defaults(net: &DenseNet<T>) -> Self {
        Self::new(net, DEFAULT_LEARNING_RATE)
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }
}

/// One Adam update. Rejects non-finite gradients before touching the
/// parameters and verifies the parameters stay finite afterwards.
pub fn adam_step<T: Scalar>(
    net: &mut DenseNet<T>,
    grads: &Gradients<T>,
    state: &mut AdamState<T>,
) -> Result<()> {
    if grads.weights.len() != net.layers().len() || grads.biases.len() != net.layers().len() {
        return Err(Error::shape(
            "adam_step grads",
            format!("{} layers", net.layers().len()),
            format!("{} layers", grads.weights.len()),
        ));
    }
    if !grads.all_finite() {
        return Err(Error::config("non-finite gradients passed to adam_step"));
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let one = T::one();
    let bc1 = one - state.beta1.powi(t);
    let bc2 = one - state.beta2.powi(t);
    let (b1, b2, eps, lr) = (state.beta1, state.beta2, state.epsilon, state.learning_rate);

    let update = |param: &mut [T], grad: &[T], m: &mut [T], v: &mut [T]| {
        for i in 0..param.len() {
            let g = grad[i];
            m[i] = b1 * m[i] + (one - b1) * g;
            v[i] = b2 * v[i] + (one - b2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            param[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    };

    for (li, layer) in net.layers_mut().iter_mut().enumerate() {
        layer
            .weights
            .require_shape("adam_step weight grads", grads.weights[li].rows(), grads.weights[li].cols())?;
        update(
            layer.weights.data_mut(),
            grads.weights[li].data(),
            state.first_moment_w[li].data_mut(),
            state.second_moment_w[li].data_mut(),
        );
        update(
            &mut layer.biases,
            &grads.biases[li],
            &mut state.first_moment_b[li],
            &mut state.second_moment_b[li],
        );
    }

    if !net.params_finite() {
        return Err(Error::config("parameters became non-finite after adam_step"));
    }
    Ok(())
}
