//! Element-wise activations. Hidden layers use ReLU; output layers are
//! identity (task network) or a sigmoid scaled to (0, 2) (scoring network),
//! which puts freshly initialized feature scores near 1.

use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Identity,
    /// `2 * sigmoid(z)`, range (0, 2).
    TwoSigmoid,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu => {
                if z > T::zero() {
                    z
                } else {
                    T::zero()
                }
            }
            Activation::Identity => z,
            Activation::TwoSigmoid => {
                let two = T::from_f64(2.0);
                two / (T::one() + (-z).exp())
            }
        }
    }

    /// Derivative expressed in terms of the activation output, so the
    /// backward pass only needs cached outputs, not pre-activations.
    #[inline]
    pub fn grad_from_output<T: Scalar>(self, y: T) -> T {
        match self {
            Activation::Relu => {
                if y > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Identity => T::one(),
            // y = 2*sigmoid(z) => dy/dz = y * (2 - y) / 2
            Activation::TwoSigmoid => y * (T::from_f64(2.0) - y) / T::from_f64(2.0),
        }
    }

    /// Stable on-disk tag for checkpoints.
    pub fn tag(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Identity => 1,
            Activation::TwoSigmoid => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Identity),
            2 => Some(Activation::TwoSigmoid),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sigmoid_at_zero_is_one() {
        assert_eq!(Activation::TwoSigmoid.apply(0.0f64), 1.0);
        assert_eq!(Activation::TwoSigmoid.apply(0.0f32), 1.0);
    }

    #[test]
    fn two_sigmoid_range_is_open_zero_two() {
        // Stay inside the range where the quotient cannot round to the
        // endpoints (f64 saturates only around |z| ~ 37).
        for i in -300..=300 {
            let z = i as f64 * 0.1;
            let y: f64 = Activation::TwoSigmoid.apply(z);
            assert!(y > 0.0 && y < 2.0, "z={z} y={y}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6f64;
        for act in [Activation::Relu, Activation::Identity, Activation::TwoSigmoid] {
            for i in -20..=20 {
                let z = i as f64 * 0.37 + 0.013; // keep clear of the ReLU kink
                let y = act.apply(z);
                let analytic = act.grad_from_output(y);
                let numeric = (act.apply(z + h) - act.apply(z - h)) / (2.0 * h);
                assert!(
                    (analytic - numeric).abs() < 1e-6,
                    "{act:?} z={z}: {analytic} vs {numeric}"
                );
            }
        }
    }

    #[test]
    fn tags_round_trip() {
        for act in [Activation::Relu, Activation::Identity, Activation::TwoSigmoid] {
            assert_eq!(Activation::from_tag(act.tag()), Some(act));
        }
        assert_eq!(Activation::from_tag(9), None);
    }
}
