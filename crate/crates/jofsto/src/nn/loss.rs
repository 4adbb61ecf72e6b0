//! Mean-squared-error loss. The scalar loss accumulates in f64 regardless of
//! the parameter type; the gradient is `2 * (pred - target) / count` in the
//! parameter type.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub fn mse_loss<T: Scalar>(pred: &Matrix<T>, target: &Matrix<T>) -> Result<(f64, Matrix<T>)> {
    if pred.shape() != target.shape() {
        return Err(Error::shape(
            "mse_loss",
            format!("{:?}", target.shape()),
            format!("{:?}", pred.shape()),
        ));
    }
    let count = (pred.rows() * pred.cols()) as f64;
    let mut sum = 0.0f64;
    let mut grad = Matrix::zeros(pred.rows(), pred.cols());
    let scale = T::from_f64(2.0 / count);
    for ((g, &p), &t) in grad.data_mut().iter_mut().zip(pred.data()).zip(target.data()) {
        let d = p - t;
        sum += d.to_f64() * d.to_f64();
        *g = scale * d;
    }
    Ok((sum / count, grad))
}
