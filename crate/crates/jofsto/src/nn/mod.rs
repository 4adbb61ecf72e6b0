//! Minimal dense feed-forward engine: forward, reverse-mode gradients,
//! mean-squared-error loss, and Adam updates. Both the scoring and the task
//! network are instances of [`DenseNet`]; everything above this module is a
//! composition of these pieces.

mod activation;
mod adam;
mod checkpoint;
mod loss;
mod net;

pub use activation::Activation;
pub use adam::{adam_step, AdamState, DEFAULT_LEARNING_RATE};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use loss::mse_loss;
pub use net::{DenseNet, ForwardCache, Gradients, Layer};
