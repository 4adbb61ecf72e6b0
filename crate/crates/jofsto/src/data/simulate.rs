//! Synthetic quantitative-signal generation.
//!
//! The surrogate signal model is a two-compartment exponential decay
//!
//! ```text
//! s(b) = f * exp(-b * d_fast) + (1 - f) * exp(-b * d_slow)
//! ```
//!
//! with unit unweighted signal (s(0) = 1), volume fraction `f`, and two
//! well-separated decay rates. Channels are highly correlated and all carry
//! information, which is the regime the selection machinery targets.
//! Magnitude noise is Rician with `sigma = 1/snr` against the unweighted
//! signal.

use crate::data::{AcquisitionScheme, Dataset};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::Real;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Signal-to-noise ratio of the unweighted signal used by default.
pub const DEFAULT_SNR: f64 = 50.0;

/// Uniform sampling bounds for the surrogate model parameters. The decay
/// ranges are disjoint so the fast rate always exceeds the slow one.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SurrogateBounds {
    pub volume_fraction: (f64, f64),
    pub d_fast: (f64, f64),
    pub d_slow: (f64, f64),
}

impl Default for SurrogateBounds {
    fn default() -> Self {
        SurrogateBounds {
            volume_fraction: (0.01, 0.99),
            d_fast: (1.5, 3.0),
            d_slow: (0.1, 1.0),
        }
    }
}

impl SurrogateBounds {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("volume_fraction", self.volume_fraction),
            ("d_fast", self.d_fast),
            ("d_slow", self.d_slow),
        ] {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::config(format!("invalid bounds for {name}: [{lo}, {hi}]")));
            }
        }
        if self.d_slow.1 >= self.d_fast.0 {
            return Err(Error::config(
                "d_slow range must lie strictly below the d_fast range",
            ));
        }
        if self.volume_fraction.0 < 0.0 || self.volume_fraction.1 > 1.0 {
            return Err(Error::config("volume fraction bounds must stay within [0, 1]"));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut StdRng) -> SurrogateParams {
        SurrogateParams {
            volume_fraction: rng.gen_range(self.volume_fraction.0..self.volume_fraction.1),
            d_fast: rng.gen_range(self.d_fast.0..self.d_fast.1),
            d_slow: rng.gen_range(self.d_slow.0..self.d_slow.1),
        }
    }

    /// Min-max scales physical parameters to [0, 1] targets.
    pub fn scale_targets(&self, p: &SurrogateParams) -> [f64; 3] {
        let scale = |v: f64, (lo, hi): (f64, f64)| (v - lo) / (hi - lo);
        [
            scale(p.volume_fraction, self.volume_fraction),
            scale(p.d_fast, self.d_fast),
            scale(p.d_slow, self.d_slow),
        ]
    }

    /// Inverse of [`SurrogateBounds::scale_targets`], for reporting in
    /// physical units.
    pub fn unscale_targets(&self, t: &[f64; 3]) -> SurrogateParams {
        let unscale = |v: f64, (lo, hi): (f64, f64)| lo + v * (hi - lo);
        SurrogateParams {
            volume_fraction: unscale(t[0], self.volume_fraction),
            d_fast: unscale(t[1], self.d_fast),
            d_slow: unscale(t[2], self.d_slow),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurrogateParams {
    pub volume_fraction: f64,
    pub d_fast: f64,
    pub d_slow: f64,
}

/// Noise-free surrogate signal for decay control `b`.
pub fn clean_signal(b: f64, p: &SurrogateParams) -> f64 {
    p.volume_fraction * (-b * p.d_fast).exp()
        + (1.0 - p.volume_fraction) * (-b * p.d_slow).exp()
}

/// Rician magnitude noise: `sqrt((clean + g1*sigma)^2 + (g2*sigma)^2)` with
/// independent standard normal `g1`, `g2`. `sigma = 0` returns the clean
/// value exactly.
pub fn rician<R: Rng + ?Sized>(clean: f64, sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        return clean;
    }
    let g1: f64 = rng.sample(StandardNormal);
    let g2: f64 = rng.sample(StandardNormal);
    let re = clean + g1 * sigma;
    let im = g2 * sigma;
    (re * re + im * im).sqrt()
}

/// Deterministic per-sample RNG stream: the same sample index yields the
/// same stream regardless of how simulation work is ordered or threaded.
pub fn stream_rng(seed: u64, index: u64) -> StdRng {
    StdRng::seed_from_u64(super::stream_rng_seed(seed, index.wrapping_add(1)))
}

/// Simulates `n` samples under the scheme. Targets are the model parameters
/// min-max scaled to [0, 1]. `snr = inf` disables noise.
pub fn simulate(scheme: &AcquisitionScheme, n: usize, snr: f64, seed: u64) -> Result<Dataset> {
    simulate_bounded(scheme, n, snr, seed, &SurrogateBounds::default())
}

pub fn simulate_bounded(
    scheme: &AcquisitionScheme,
    n: usize,
    snr: f64,
    seed: u64,
    bounds: &SurrogateBounds,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::config("cannot simulate zero samples"));
    }
    if snr.is_nan() || snr <= 0.0 {
        return Err(Error::config(format!("snr must be positive, got {snr}")));
    }
    bounds.validate()?;
    let sigma = if snr.is_finite() { 1.0 / snr } else { 0.0 };

    let channels = scheme.channels();
    let mut x = Matrix::zeros(n, channels);
    let mut y = Matrix::zeros(n, 3);
    for i in 0..n {
        let mut rng = stream_rng(seed, i as u64);
        let params = bounds.sample(&mut rng);
        for c in 0..channels {
            let clean = clean_signal(scheme.control(c) as f64, &params);
            x.set(i, c, rician(clean, sigma, &mut rng) as Real);
        }
        let targets = bounds.scale_targets(&params);
        for (j, &t) in targets.iter().enumerate() {
            y.set(i, j, t as Real);
        }
    }
    Dataset::new(x, y)
}

/// Channels marked corrupted in the default dataset: a fixed stride covering
/// roughly a fifth of the super-design, the way real densely-sampled
/// acquisitions carry unusable measurements (motion-corrupted volumes,
/// water-absorption bands).
pub fn default_corrupted_channels(channels: usize) -> Vec<usize> {
    (0..)
        .map(|k| 3 + 5 * k)
        .take_while(|&c| c < channels)
        .collect()
}

/// Like [`simulate`], then destroys the target dependence of the listed
/// channels by independently permuting their values across samples. The
/// permuted channels keep a realistic marginal distribution but carry no
/// information about the targets.
pub fn simulate_with_noise_channels(
    scheme: &AcquisitionScheme,
    noise_channels: &[usize],
    n: usize,
    snr: f64,
    seed: u64,
) -> Result<Dataset> {
    let mut dataset = simulate(scheme, n, snr, seed)?;
    for (k, &c) in noise_channels.iter().enumerate() {
        if c >= dataset.channels() {
            return Err(Error::config(format!("noise channel {c} out of range")));
        }
        let mut rng = StdRng::seed_from_u64(super::stream_rng_seed(
            seed,
            NOISE_SALT.wrapping_add(k as u64),
        ));
        // Fisher-Yates over the column.
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            let a = dataset.x.get(i, c);
            let b = dataset.x.get(j, c);
            dataset.x.set(i, c, b);
            dataset.x.set(j, c, a);
        }
    }
    Ok(dataset)
}

const NOISE_SALT: u64 = 0x4e4f_4953_4500_0001;
