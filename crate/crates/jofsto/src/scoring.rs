//! Feature scoring: per-sample scores from the scoring network, their blend
//! with the population (sample-independent) score, the streamed population
//! mean, and the blend-weight annealing schedule.
//!
//! Scores are nonnegative by construction (the scoring net's output
//! activation maps into (0, 2)); downstream selection uses only their
//! ordering.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{Activation, DenseNet};
use crate::scalar::Scalar;
use std::fs;
use std::path::Path;

/// Streaming mean over per-sample score rows; sums are always f64.
#[derive(Clone, Debug)]
pub struct RunningMean {
    sums: Vec<f64>,
    count: u64,
}

impl RunningMean {
    pub fn new(width: usize) -> Self {
        RunningMean { sums: vec![0.0; width], count: 0 }
    }

    pub fn width(&self) -> usize {
        self.sums.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn reset(&mut self) {
        self.sums.iter_mut().for_each(|s| *s = 0.0);
        self.count = 0;
    }

    pub fn accumulate<T: Scalar>(&mut self, rows: &Matrix<T>) -> Result<()> {
        if rows.cols() != self.sums.len() {
            return Err(Error::shape(
                "running mean",
                format!("{} columns", self.sums.len()),
                format!("{} columns", rows.cols()),
            ));
        }
        for r in 0..rows.rows() {
            for (s, &v) in self.sums.iter_mut().zip(rows.row(r)) {
                *s += v.to_f64();
            }
        }
        self.count += rows.rows() as u64;
        Ok(())
    }

    pub fn mean(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::config("running mean finalized with zero samples"));
        }
        let n = self.count as f64;
        Ok(self.sums.iter().map(|s| s / n).collect())
    }
}

/// Score state carried through one training step.
#[derive(Clone, Debug)]
pub struct ScoreState<T> {
    /// Latest per-sample scores (batch x channels).
    pub per_sample: Matrix<T>,
    /// Population score, broadcast across samples when blending.
    pub population: Vec<T>,
    /// Blend weight in [0, 1]; 1 = fully per-sample, 0 = fully population.
    pub alpha: T,
    /// Streamed accumulator for the population mean of per-sample scores.
    pub running_mean: RunningMean,
}

impl<T: Scalar> ScoreState<T> {
    pub fn new(channels: usize, alpha: f64) -> Self {
        ScoreState {
            per_sample: Matrix::zeros(0, channels),
            population: vec![T::one(); channels],
            alpha: T::from_f64(alpha),
            running_mean: RunningMean::new(channels),
        }
    }
}

/// Runs the scoring network over a batch. The net must map channels to
/// channels with the (0, 2) sigmoid output so scores start near 1.
pub fn sample_scores<T: Scalar>(
    scoring_net: &DenseNet<T>,
    inputs: &Matrix<T>,
) -> Result<Matrix<T>> {
    if scoring_net.output_activation() != Activation::TwoSigmoid {
        return Err(Error::config(
            "scoring network must use the two-sigmoid output activation",
        ));
    }
    if scoring_net.output_dim() != inputs.cols() {
        return Err(Error::config(format!(
            "scoring network output width {} does not match {} channels",
            scoring_net.output_dim(),
            inputs.cols()
        )));
    }
    scoring_net.predict(inputs)
}

/// `alpha * per_sample + (1 - alpha) * population`, population broadcast
/// across rows.
pub fn blend_rows<T: Scalar>(
    per_sample: &Matrix<T>,
    population: &[T],
    alpha: T,
) -> Result<Matrix<T>> {
    if per_sample.cols() != population.len() {
        return Err(Error::shape(
            "score blend",
            format!("{} columns", population.len()),
            format!("{} columns", per_sample.cols()),
        ));
    }
    let mut out = Matrix::zeros(per_sample.rows(), per_sample.cols());
    let one_minus = T::one() - alpha;
    for r in 0..per_sample.rows() {
        let src = per_sample.row(r);
        for ((o, &s), &p) in out.row_mut(r).iter_mut().zip(src).zip(population) {
            *o = alpha * s + one_minus * p;
        }
    }
    Ok(out)
}

/// Blends the state's per-sample scores with its population score.
pub fn blend<T: Scalar>(state: &ScoreState<T>) -> Result<Matrix<T>> {
    blend_rows(&state.per_sample, &state.population, state.alpha)
}

/// Streams a batch of per-sample scores into the state's population-mean
/// accumulator.
pub fn accumulate_mean<T: Scalar>(state: &mut ScoreState<T>, batch: &Matrix<T>) -> Result<()> {
    state.running_mean.accumulate(batch)
}

/// Population score update between elimination steps: the elementwise
/// average of the previous population score and the fresh per-sample mean.
/// The first step has no previous score and adopts the mean directly.
pub fn update_global<T: Scalar>(prev: &[T], sample_mean: &[T]) -> Vec<T> {
    assert_eq!(prev.len(), sample_mean.len(), "score width mismatch");
    let half = T::from_f64(0.5);
    prev.iter()
        .zip(sample_mean)
        .map(|(&a, &b)| half * (a + b))
        .collect()
}

/// One annealing update of the blend weight: `max(alpha - 2/(e2 - e1), 0)`.
/// Starting from 1/2 this reaches exactly 0 within ceil((e2-e1)/4)
/// applications.
pub fn anneal_blend<T: Scalar>(alpha: T, e1: usize, e2: usize) -> Result<T> {
    if e2 <= e1 {
        return Err(Error::config(format!(
            "score annealing window requires e2 > e1 (got e1={e1}, e2={e2})"
        )));
    }
    let step = T::from_f64(2.0 / (e2 - e1) as f64);
    Ok((alpha - step).max(T::zero()))
}

/// Writes one `index<TAB>score` line per channel.
pub fn write_scores(path: &Path, scores: &[f32]) -> Result<()> {
    let mut out = String::new();
    for (i, s) in scores.iter().enumerate() {
        out.push_str(&format!("{i}\t{s}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_scores(path: &Path) -> Result<Vec<f32>> {
    let text = fs::read_to_string(path)?;
    let mut scores = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut parts = line.split('\t');
        let idx: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| score_file_err(path, lineno, "missing index"))?;
        if idx != lineno {
            return Err(score_file_err(path, lineno, "indices out of order"));
        }
        let value: f32 = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| score_file_err(path, lineno, "missing score"))?;
        scores.push(value);
    }
    Ok(scores)
}

fn score_file_err(path: &Path, line: usize, detail: &str) -> Error {
    Error::Format {
        path: path.display().to_string(),
        offset: line as u64,
        detail: format!("score file line {line}: {detail}"),
    }
}
