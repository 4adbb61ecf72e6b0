//! One end-to-end update over the coupled graph:
//!
//! ```text
//! per_sample = two_sigmoid(scoring(x))            per-channel scores
//! s = alpha * per_sample + (1-alpha) * population
//! masked = m * x + (1-m) * fill
//! prediction = task(s . masked)
//! loss = mse(prediction, targets)
//! ```
//!
//! Gradients reach the scoring network only through the `s . masked`
//! product; at `alpha = 0` they are exactly zero and the scoring network is
//! left untouched. The mask is a constant within a single update.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{adam_step, mse_loss, AdamState, DenseNet, Gradients};
use crate::scalar::Scalar;
use crate::scoring;

#[derive(Clone, Debug)]
pub struct Batch<T> {
    pub inputs: Matrix<T>,
    pub targets: Matrix<T>,
    pub sample_indices: Vec<usize>,
}

impl<T: Scalar> Batch<T> {
    pub fn new(inputs: Matrix<T>, targets: Matrix<T>, sample_indices: Vec<usize>) -> Result<Self> {
        if inputs.rows() == 0 {
            return Err(Error::config("batch must contain at least one sample"));
        }
        if inputs.rows() != targets.rows() {
            return Err(Error::shape(
                "batch",
                format!("{} target rows", inputs.rows()),
                format!("{} target rows", targets.rows()),
            ));
        }
        if sample_indices.len() != inputs.rows() {
            return Err(Error::shape(
                "batch sample indices",
                format!("{}", inputs.rows()),
                format!("{}", sample_indices.len()),
            ));
        }
        Ok(Batch { inputs, targets, sample_indices })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.rows() == 0
    }
}

/// Constants of the graph for one update: population score, blend weight,
/// mask, fill, and whether a scoring network participates at all.
#[derive(Clone, Copy, Debug)]
pub struct JointContext<'a, T> {
    pub population_score: &'a [T],
    pub score_alpha: T,
    pub mask: &'a [T],
    pub fill: &'a [T],
    /// False bypasses the scoring network with constant unit per-sample
    /// scores (the scoring-network ablation).
    pub use_scoring: bool,
}

impl<'a, T: Scalar> JointContext<'a, T> {
    fn check(&self, channels: usize) -> Result<()> {
        for (name, len) in [
            ("population score", self.population_score.len()),
            ("mask", self.mask.len()),
            ("fill", self.fill.len()),
        ] {
            if len != channels {
                return Err(Error::shape("joint context", format!("{channels} {name} entries"), len));
            }
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct JointGrads<T> {
    pub loss: f64,
    pub predictions: Matrix<T>,
    /// None when the scoring network is bypassed.
    pub scoring: Option<Gradients<T>>,
    pub task: Gradients<T>,
}

#[derive(Debug)]
pub struct JointOutput<T> {
    pub loss: f64,
    pub predictions: Matrix<T>,
}

fn masked_inputs<T: Scalar>(inputs: &Matrix<T>, mask: &[T], fill: &[T]) -> Matrix<T> {
    let mut out = Matrix::zeros(inputs.rows(), inputs.cols());
    for r in 0..inputs.rows() {
        let src = inputs.row(r);
        let dst = out.row_mut(r);
        for c in 0..src.len() {
            dst[c] = mask[c] * src[c] + (T::one() - mask[c]) * fill[c];
        }
    }
    out
}

fn hadamard<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    debug_assert_eq!(a.shape(), b.shape());
    let mut out = Matrix::zeros(a.rows(), a.cols());
    for ((o, &x), &y) in out.data_mut().iter_mut().zip(a.data()).zip(b.data()) {
        *o = x * y;
    }
    out
}

/// Blended score matrix for a batch. Runs the scoring network only when it
/// both participates and has nonzero blend weight; otherwise the blend
/// collapses to constants.
fn scores_for_batch<T: Scalar>(
    scoring_net: &DenseNet<T>,
    batch: &Batch<T>,
    ctx: &JointContext<T>,
    force_scoring_pass: bool,
) -> Result<(Matrix<T>, Option<crate::nn::ForwardCache<T>>)> {
    let channels = batch.inputs.cols();
    if ctx.use_scoring && (ctx.score_alpha > T::zero() || force_scoring_pass) {
        if scoring_net.output_activation() != crate::nn::Activation::TwoSigmoid {
            return Err(Error::config(
                "scoring network must use the two-sigmoid output activation",
            ));
        }
        if scoring_net.output_dim() != channels {
            return Err(Error::config(format!(
                "scoring network output width {} does not match {channels} channels",
                scoring_net.output_dim()
            )));
        }
        let (per_sample, cache) = scoring_net.forward(&batch.inputs)?;
        let s = scoring::blend_rows(&per_sample, ctx.population_score, ctx.score_alpha)?;
        Ok((s, Some(cache)))
    } else {
        // alpha * 1 + (1 - alpha) * population, broadcast over rows.
        let ones = Matrix::from_vec(1, channels, vec![T::one(); channels]);
        let row = scoring::blend_rows(&ones, ctx.population_score, ctx.score_alpha)?;
        let mut s = Matrix::zeros(batch.len(), channels);
        for r in 0..batch.len() {
            s.row_mut(r).copy_from_slice(row.row(0));
        }
        Ok((s, None))
    }
}

/// Loss of the composite graph, no mutation. This is the function the
/// finite-difference suites probe.
pub fn joint_loss<T: Scalar>(
    scoring_net: &DenseNet<T>,
    task_net: &DenseNet<T>,
    batch: &Batch<T>,
    ctx: &JointContext<T>,
) -> Result<f64> {
    ctx.check(batch.inputs.cols())?;
    let (s, _) = scores_for_batch(scoring_net, batch, ctx, false)?;
    let x = masked_inputs(&batch.inputs, ctx.mask, ctx.fill);
    let prediction = task_net.predict(&hadamard(&s, &x))?;
    Ok(mse_loss(&prediction, &batch.targets)?.0)
}

/// Full gradient computation without applying updates. Scoring gradients
/// are present whenever a scoring network participates; at zero blend
/// weight they are exactly zero.
pub fn joint_gradients<T: Scalar>(
    scoring_net: &DenseNet<T>,
    task_net: &DenseNet<T>,
    batch: &Batch<T>,
    ctx: &JointContext<T>,
) -> Result<JointGrads<T>> {
    ctx.check(batch.inputs.cols())?;
    let (s, scoring_cache) = scores_for_batch(scoring_net, batch, ctx, true)?;
    let x = masked_inputs(&batch.inputs, ctx.mask, ctx.fill);
    let z = hadamard(&s, &x);
    let (prediction, task_cache) = task_net.forward(&z)?;
    let (loss, d_prediction) = mse_loss(&prediction, &batch.targets)?;
    let (task_grads, d_z) = task_net.backward(&task_cache, &d_prediction)?;

    let scoring_grads = match scoring_cache {
        Some(cache) => {
            // dL/ds = dL/dz . x, then dL/d(per_sample) = alpha * dL/ds.
            let mut d_per_sample = hadamard(&d_z, &x);
            for v in d_per_sample.data_mut() {
                *v = ctx.score_alpha * *v;
            }
            let (grads, _d_inputs) = scoring_net.backward(&cache, &d_per_sample)?;
            Some(grads)
        }
        None => None,
    };

    Ok(JointGrads {
        loss,
        predictions: prediction,
        scoring: scoring_grads,
        task: task_grads,
    })
}

/// One training update: forward, backward, and one Adam step per
/// participating network. The scoring network is skipped entirely (no
/// forward pass, no update) when its gradient is structurally zero.
pub fn train_batch<T: Scalar>(
    scoring_net: &mut DenseNet<T>,
    scoring_opt: &mut AdamState<T>,
    task_net: &mut DenseNet<T>,
    task_opt: &mut AdamState<T>,
    batch: &Batch<T>,
    ctx: &JointContext<T>,
) -> Result<JointOutput<T>> {
    ctx.check(batch.inputs.cols())?;
    let train_scoring = ctx.use_scoring && ctx.score_alpha > T::zero();

    let (s, scoring_cache) = scores_for_batch(scoring_net, batch, ctx, false)?;
    let x = masked_inputs(&batch.inputs, ctx.mask, ctx.fill);
    let z = hadamard(&s, &x);
    let (prediction, task_cache) = task_net.forward(&z)?;
    let (loss, d_prediction) = mse_loss(&prediction, &batch.targets)?;
    if !loss.is_finite() {
        return Err(Error::config(format!("non-finite loss {loss}")));
    }
    let (task_grads, d_z) = task_net.backward(&task_cache, &d_prediction)?;

    if train_scoring {
        let cache = scoring_cache.expect("scoring pass ran when training the scorer");
        let mut d_per_sample = hadamard(&d_z, &x);
        for v in d_per_sample.data_mut() {
            *v = ctx.score_alpha * *v;
        }
        let (scoring_grads, _) = scoring_net.backward(&cache, &d_per_sample)?;
        adam_step(scoring_net, &scoring_grads, scoring_opt)?;
    }
    adam_step(task_net, &task_grads, task_opt)?;

    Ok(JointOutput { loss, predictions: prediction })
}
