//! Joint populationwide feature selection and task optimization for
//! data-driven experiment design.
//!
//! Two networks train end-to-end: a scoring network rates every measurement
//! channel and a task network predicts the targets from score-weighted,
//! masked inputs. An outer recursive-feature-elimination loop shrinks the
//! active channel set stepwise, annealing the score blend and the mask so
//! the task network adapts continuously. Each step yields a binary channel
//! mask, a population score, and a trained task network ready for inference
//! on subsampled acquisitions.
//!
//! The numeric core is generic over the scalar type ([`scalar::Scalar`],
//! implemented for `f32`/`f64`); training and the CLI run on [`Real`]
//! while gradient-verification suites instantiate `f64`.

pub mod baselines;
pub mod data;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod masking;
pub mod metrics;
pub mod nn;
pub mod scalar;
pub mod scoring;
pub mod trainer;

pub use error::{Error, Result};

/// Scalar used by the production training path and all file formats.
pub type Real = f32;

/// Dense matrix over [`Real`].
pub type RealMatrix = linalg::Matrix<Real>;

/// Network over [`Real`], as trained and persisted by the pipeline.
pub type RealNet = nn::DenseNet<Real>;
