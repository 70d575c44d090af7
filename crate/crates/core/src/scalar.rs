//! Scalar abstractions.
//!
//! [`Scalar`] covers everything the closed-form bounds need and is
//! implemented for `f32`, `f64` and exact `Ratio<i64>`. [`Real`] is the
//! floating-point subset used by the PCA code.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

pub trait Scalar: Num + Clone + PartialOrd + Debug + Send + Sync + 'static {
    /// `num / den`; `den` must be non-zero.
    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_count(n: u64) -> Self {
        Self::from_ratio(n as i64, 1)
    }

    /// Nearest integer, halves rounded toward +inf.
    fn round_half_up(&self) -> i64;

    fn as_f64(&self) -> f64;

    fn is_exact() -> bool {
        false
    }

    /// Equality up to rounding for floats; exact otherwise.
    fn approx_eq(&self, other: &Self) -> bool {
        self == other
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn from_ratio(num: i64, den: i64) -> Self {
                num as $t / den as $t
            }

            fn round_half_up(&self) -> i64 {
                (*self + 0.5).floor() as i64
            }

            fn as_f64(&self) -> f64 {
                *self as f64
            }

            fn approx_eq(&self, other: &Self) -> bool {
                (self - other).abs() <= <$t>::EPSILON * 8.0 * self.abs().max(other.abs()).max(1.0)
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

impl Scalar for Ratio<i64> {
    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num, den)
    }

    fn round_half_up(&self) -> i64 {
        (self + Ratio::new(1, 2)).floor().to_integer()
    }

    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_exact() -> bool {
        true
    }
}

/// Floating-point scalar for the eigen-matching lab.
pub trait Real: Float + FromPrimitive + Scalar + Default + std::iter::Sum {
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}
