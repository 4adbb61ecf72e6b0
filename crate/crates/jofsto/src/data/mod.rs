//! Datasets: acquisition schemes, train/val/test splits, channel-wise
//! normalization by the training 99th percentile, and fill values.
//!
//! The input matrix holds one sample per row and one measurement channel per
//! column. Normalizers and fill values are derived from the training split
//! only and then applied to every split.

mod io;
mod simulate;

pub use io::{
    load_matrix, load_matrix_csv, load_scheme, load_split, save_matrix, save_matrix_csv,
    save_scheme, save_split, write_design_subset,
};
pub use simulate::{
    clean_signal, default_corrupted_channels, rician, simulate, simulate_bounded,
    simulate_with_noise_channels, stream_rng, SurrogateBounds, SurrogateParams, DEFAULT_SNR,
};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::Real;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

/// One row per channel; each row is the acquisition-parameter combination
/// that produces that channel.
#[derive(Clone, Debug, PartialEq)]
pub struct AcquisitionScheme {
    pub params: Matrix<Real>,
    pub labels: Option<Vec<String>>,
}

impl AcquisitionScheme {
    pub fn new(params: Matrix<Real>, labels: Option<Vec<String>>) -> Result<Self> {
        if params.rows() == 0 || params.cols() == 0 {
            return Err(Error::config("acquisition scheme must be non-empty"));
        }
        if let Some(l) = &labels {
            if l.len() != params.rows() {
                return Err(Error::config("label count must match channel count"));
            }
        }
        for a in 0..params.rows() {
            for b in (a + 1)..params.rows() {
                if params.row(a) == params.row(b) {
                    return Err(Error::config(format!(
                        "acquisition scheme rows {a} and {b} are identical"
                    )));
                }
            }
        }
        Ok(AcquisitionScheme { params, labels })
    }

    /// Dense 1-D grid of decay controls over [0, 6], channel 0 unweighted
    /// (b = 0). The upper half of the range decays into the noise floor at
    /// the default SNR, as a dense super-design deliberately over-covers
    /// the measurement space.
    pub fn default_grid(channels: usize) -> Result<Self> {
        if channels < 2 {
            return Err(Error::config("default grid needs at least 2 channels"));
        }
        let rows: Vec<Vec<Real>> = (0..channels)
            .map(|c| vec![6.0 * c as Real / (channels - 1) as Real])
            .collect();
        AcquisitionScheme::new(Matrix::from_rows(&rows), None)
    }

    pub fn channels(&self) -> usize {
        self.params.rows()
    }

    /// Scalar decay control for a channel (first parameter column).
    pub fn control(&self, channel: usize) -> Real {
        self.params.get(channel, 0)
    }

    /// Retains only the channels active in a binary mask.
    pub fn subset(&self, mask: &[u8]) -> Result<Self> {
        if mask.len() != self.channels() {
            return Err(Error::config("mask width does not match scheme"));
        }
        let keep: Vec<usize> = (0..mask.len()).filter(|&c| mask[c] == 1).collect();
        let rows: Vec<Vec<Real>> = keep.iter().map(|&c| self.params.row(c).to_vec()).collect();
        let labels = self
            .labels
            .as_ref()
            .map(|l| keep.iter().map(|&c| l[c].clone()).collect());
        AcquisitionScheme::new(Matrix::from_rows(&rows), labels)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn is_empty(&self) -> bool {
        self.train.is_empty() && self.val.is_empty() && self.test.is_empty()
    }
}

#[derive(Clone, Copy, Debug)]
pub enum SplitSpec {
    /// Fractions of the dataset; must sum to at most 1.
    Fractions(f64, f64, f64),
    /// Explicit row counts.
    Counts(usize, usize, usize),
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub x: Matrix<Real>,
    pub y: Matrix<Real>,
    pub split: Split,
    /// Training-split 99th percentile per channel, set by [`Dataset::normalize`].
    pub normalizers: Option<Vec<Real>>,
    /// Post-normalization training medians, set by [`Dataset::compute_fill`].
    pub fill: Option<Vec<Real>>,
}

impl Dataset {
    pub fn new(x: Matrix<Real>, y: Matrix<Real>) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(Error::shape(
                "dataset",
                format!("{} target rows", x.rows()),
                format!("{} target rows", y.rows()),
            ));
        }
        Ok(Dataset {
            x,
            y,
            split: Split::default(),
            normalizers: None,
            fill: None,
        })
    }

    pub fn samples(&self) -> usize {
        self.x.rows()
    }

    pub fn channels(&self) -> usize {
        self.x.cols()
    }

    pub fn targets(&self) -> usize {
        self.y.cols()
    }

    /// Assigns disjoint shuffled splits.
    pub fn assign_split(&mut self, spec: SplitSpec, seed: u64) -> Result<()> {
        let n = self.samples();
        let (n_train, n_val, n_test) = match spec {
            SplitSpec::Fractions(ft, fv, fe) => {
                if ft < 0.0 || fv < 0.0 || fe < 0.0 || ft + fv + fe > 1.0 + 1e-12 {
                    return Err(Error::config("split fractions must be >= 0 and sum to <= 1"));
                }
                let t = (ft * n as f64).round() as usize;
                let v = (fv * n as f64).round() as usize;
                let e = (fe * n as f64).round() as usize;
                (t, v, e.min(n.saturating_sub(t + v)))
            }
            SplitSpec::Counts(t, v, e) => (t, v, e),
        };
        if n_train + n_val + n_test > n {
            return Err(Error::config(format!(
                "split sizes {n_train}+{n_val}+{n_test} exceed {n} samples"
            )));
        }
        let mut indices: Vec<usize> = (0..n).collect();
        let mut rng = StdRng::seed_from_u64(stream_rng_seed(seed, SPLIT_SALT));
        indices.shuffle(&mut rng);
        self.split = Split {
            train: indices[..n_train].to_vec(),
            val: indices[n_train..n_train + n_val].to_vec(),
            test: indices[n_train + n_val..n_train + n_val + n_test].to_vec(),
        };
        Ok(())
    }

    fn train_rows(&self) -> Result<Matrix<Real>> {
        if self.split.train.is_empty() {
            return Err(Error::config("training split is empty"));
        }
        Ok(Matrix::gather_rows(&self.x, &self.split.train))
    }

    /// Divides every channel (all splits) by that channel's training-split
    /// 99th percentile (nearest rank). Stores the normalizers for the
    /// inverse transform at reporting time.
    pub fn normalize(&mut self) -> Result<()> {
        let train = self.train_rows()?;
        let mut normalizers = Vec::with_capacity(self.channels());
        let mut column = vec![0.0 as Real; train.rows()];
        for c in 0..self.channels() {
            for (r, v) in column.iter_mut().enumerate() {
                *v = train.get(r, c);
            }
            let p99 = percentile_nearest_rank(&mut column, 99.0);
            if p99.is_nan() || p99 <= 0.0 {
                return Err(Error::config(format!(
                    "channel {c} has non-positive 99th percentile {p99}; degenerate channel"
                )));
            }
            normalizers.push(p99);
        }
        for r in 0..self.x.rows() {
            for (v, &norm) in self.x.row_mut(r).iter_mut().zip(&normalizers) {
                *v /= norm;
            }
        }
        self.normalizers = Some(normalizers);
        Ok(())
    }

    /// Per-channel medians of the (normalized) training rows.
    pub fn compute_fill(&mut self) -> Result<()> {
        let train = self.train_rows()?;
        self.fill = Some(crate::masking::compute_fill(&train)?);
        Ok(())
    }

    /// Normalization followed by fill computation; the standard pipeline
    /// after assigning splits.
    pub fn prepare(&mut self) -> Result<()> {
        self.normalize()?;
        self.compute_fill()
    }

    pub fn require_prepared(&self) -> Result<(&[Real], &[Real])> {
        let norm = self
            .normalizers
            .as_deref()
            .ok_or_else(|| Error::config("dataset is not normalized"))?;
        let fill = self
            .fill
            .as_deref()
            .ok_or_else(|| Error::config("dataset has no fill values"))?;
        Ok((norm, fill))
    }
}

/// Nearest-rank percentile on an unsorted buffer (sorts in place):
/// the value at 1-based rank `ceil(p/100 * n)`.
pub fn percentile_nearest_rank(values: &mut [Real], p: f64) -> Real {
    assert!(!values.is_empty(), "percentile of empty slice");
    assert!((0.0..=100.0).contains(&p), "percentile out of range");
    values.sort_by(|a, b| a.partial_cmp(b).expect("values must be comparable"));
    let n = values.len();
    let rank = ((p / 100.0 * n as f64).ceil() as usize).clamp(1, n);
    values[rank - 1]
}

const SPLIT_SALT: u64 = 0x5350_4c49_5400_0001;

/// splitmix64-style seed derivation so independent RNG streams never share
/// state.
pub(crate) fn stream_rng_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_dataset(n: usize, channels: usize) -> Dataset {
        let rows: Vec<Vec<Real>> = (0..n)
            .map(|r| (0..channels).map(|c| (r + c * n + 1) as Real).collect())
            .collect();
        let y: Vec<Vec<Real>> = (0..n).map(|r| vec![r as Real]).collect();
        Dataset::new(Matrix::from_rows(&rows), Matrix::from_rows(&y)).unwrap()
    }

    #[test]
    fn scheme_rejects_duplicate_rows() {
        let params = Matrix::from_rows(&[vec![0.0f32], vec![1.0], vec![0.0]]);
        assert!(AcquisitionScheme::new(params, None).is_err());
    }

    #[test]
    fn default_grid_starts_at_zero_control() {
        let s = AcquisitionScheme::default_grid(64).unwrap();
        assert_eq!(s.channels(), 64);
        assert_eq!(s.control(0), 0.0);
        assert_eq!(s.control(63), 6.0);
    }

    #[test]
    fn scheme_subset_keeps_active_rows() {
        let s = AcquisitionScheme::default_grid(5).unwrap();
        let sub = s.subset(&[1, 0, 1, 0, 0]).unwrap();
        assert_eq!(sub.channels(), 2);
        assert_eq!(sub.control(0), s.control(0));
        assert_eq!(sub.control(1), s.control(2));
    }

    #[test]
    fn split_fractions_all_train() {
        let mut d = toy_dataset(10, 2);
        d.assign_split(SplitSpec::Fractions(1.0, 0.0, 0.0), 1).unwrap();
        assert_eq!(d.split.train.len(), 10);
        assert!(d.split.val.is_empty() && d.split.test.is_empty());
    }

    #[test]
    fn split_ninety_ten() {
        let mut d = toy_dataset(100, 2);
        d.assign_split(SplitSpec::Fractions(0.9, 0.1, 0.0), 1).unwrap();
        assert_eq!(d.split.train.len(), 90);
        assert_eq!(d.split.val.len(), 10);
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let mut a = toy_dataset(50, 2);
        let mut b = toy_dataset(50, 2);
        a.assign_split(SplitSpec::Counts(30, 10, 10), 99).unwrap();
        b.assign_split(SplitSpec::Counts(30, 10, 10), 99).unwrap();
        assert_eq!(a.split, b.split);

        let mut seen = std::collections::HashSet::new();
        for i in a.split.train.iter().chain(&a.split.val).chain(&a.split.test) {
            assert!(seen.insert(*i), "index {i} appears twice");
        }
    }

    #[test]
    fn split_rejects_oversized_counts() {
        let mut d = toy_dataset(10, 2);
        assert!(d.assign_split(SplitSpec::Counts(8, 2, 1), 0).is_err());
    }

    #[test]
    fn percentile_of_1_to_100_is_99() {
        let mut v: Vec<Real> = (1..=100).map(|i| i as Real).collect();
        assert_eq!(percentile_nearest_rank(&mut v, 99.0), 99.0);
    }

    #[test]
    fn percentile_matches_sort_oracle() {
        use rand::Rng;
        let mut rng = rand::rngs::StdRng::seed_from_u64(4);
        let mut v: Vec<Real> = (0..537).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let mut sorted = v.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let rank = (99.0f64 / 100.0 * 537.0).ceil() as usize; // nearest rank, 1-based
        assert_eq!(percentile_nearest_rank(&mut v, 99.0), sorted[rank - 1]);
    }

    #[test]
    fn normalize_constant_column_becomes_ones() {
        let rows: Vec<Vec<Real>> = (0..10).map(|_| vec![5.0]).collect();
        let y: Vec<Vec<Real>> = (0..10).map(|_| vec![0.0]).collect();
        let mut d = Dataset::new(Matrix::from_rows(&rows), Matrix::from_rows(&y)).unwrap();
        d.assign_split(SplitSpec::Fractions(1.0, 0.0, 0.0), 0).unwrap();
        d.normalize().unwrap();
        assert!(d.x.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn normalize_uses_training_statistics_for_all_splits() {
        // Training column is 1..100 (normalizer 99); the validation row
        // holds 198, which normalizes to 2 — values beyond 1 are expected.
        let mut rows: Vec<Vec<Real>> = (1..=100).map(|i| vec![i as Real]).collect();
        rows.push(vec![198.0]);
        let y: Vec<Vec<Real>> = (0..101).map(|_| vec![0.0]).collect();
        let mut d = Dataset::new(Matrix::from_rows(&rows), Matrix::from_rows(&y)).unwrap();
        d.split = Split {
            train: (0..100).collect(),
            val: vec![100],
            test: vec![],
        };
        d.normalize().unwrap();
        assert_eq!(d.normalizers.as_ref().unwrap()[0], 99.0);
        assert_eq!(d.x.get(100, 0), 2.0);
    }

    #[test]
    fn normalize_training_99th_percentile_becomes_one() {
        use rand::Rng;
        let mut rng = rand::rngs::StdRng::seed_from_u64(8);
        let rows: Vec<Vec<Real>> = (0..500)
            .map(|_| vec![rng.gen_range(0.5..9.5), rng.gen_range(0.1..2.0)])
            .collect();
        let y: Vec<Vec<Real>> = (0..500).map(|_| vec![0.0]).collect();
        let mut d = Dataset::new(Matrix::from_rows(&rows), Matrix::from_rows(&y)).unwrap();
        d.assign_split(SplitSpec::Counts(400, 50, 50), 3).unwrap();
        d.normalize().unwrap();
        let train = Matrix::gather_rows(&d.x, &d.split.train);
        for c in 0..2 {
            let mut col = train.column(c);
            assert_eq!(percentile_nearest_rank(&mut col, 99.0), 1.0, "channel {c}");
        }
    }

    #[test]
    fn normalize_twice_is_idempotent() {
        let mut d = toy_dataset(200, 3);
        d.assign_split(SplitSpec::Counts(150, 25, 25), 5).unwrap();
        d.normalize().unwrap();
        let snapshot: Vec<u32> = d.x.data().iter().map(|v| v.to_bits()).collect();
        d.normalize().unwrap();
        assert!(d.normalizers.as_ref().unwrap().iter().all(|&n| n == 1.0));
        let after: Vec<u32> = d.x.data().iter().map(|v| v.to_bits()).collect();
        assert_eq!(snapshot, after);
    }

    #[test]
    fn normalize_rejects_degenerate_channel() {
        let rows: Vec<Vec<Real>> = (0..10).map(|_| vec![0.0]).collect();
        let y: Vec<Vec<Real>> = (0..10).map(|_| vec![0.0]).collect();
        let mut d = Dataset::new(Matrix::from_rows(&rows), Matrix::from_rows(&y)).unwrap();
        d.assign_split(SplitSpec::Fractions(1.0, 0.0, 0.0), 0).unwrap();
        assert!(d.normalize().is_err());
    }

    #[test]
    fn fill_comes_from_training_rows_only() {
        let mut d = toy_dataset(10, 1);
        d.split = Split {
            train: vec![0, 1, 2],
            val: vec![9],
            test: vec![],
        };
        d.compute_fill().unwrap();
        // Training column values are 1, 2, 3 regardless of the outlier row 9.
        assert_eq!(d.fill.as_ref().unwrap()[0], 2.0);
    }
}
