//! Scalar abstraction for measure weights.
//!
//! The measure, dependence, Morley and empirics modules are generic over
//! [`Weight`]. The rational implementation is exact end to end; the float
//! implementations exist for quick estimation passes and for callers that do
//! not need equality-grade answers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive};
use std::fmt::{Debug, Display};

/// Scalar type usable as a measure weight.
///
/// Implementors must behave like a subfield of the reals: exact rationals
/// keep every guarantee in this crate, floats trade exactness for speed.
pub trait Weight:
    Clone + PartialOrd + Debug + Display + Signed + FromPrimitive + Send + Sync + 'static
{
    /// The value `p / q`. Panics if `q == 0`.
    fn from_ratio(p: i64, q: i64) -> Self;

    /// Whether a weight total counts as exactly one unit of mass.
    fn is_unit_total(&self) -> bool;

    /// Lowest-terms numerator and denominator strings for reports.
    fn fraction_parts(&self) -> (String, String);

    /// Lossy float view, for summaries and Monte-Carlo bookkeeping.
    fn to_f64_lossy(&self) -> f64;

    /// `floor(clamp(self, 0, 1) * 2^64)`, saturating. Drives inverse-CDF
    /// sampling so identical seeds reproduce identical draws.
    fn sample_threshold(&self) -> u64;

    /// Strictly positive and comparable; NaN floats fail this.
    fn is_positive_weight(&self) -> bool {
        *self > Self::zero()
    }
}

impl Weight for BigRational {
    fn from_ratio(p: i64, q: i64) -> Self {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn is_unit_total(&self) -> bool {
        self.is_one()
    }

    fn fraction_parts(&self) -> (String, String) {
        (self.numer().to_string(), self.denom().to_string())
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn sample_threshold(&self) -> u64 {
        if self.is_negative() {
            return 0;
        }
        if *self >= BigRational::one() {
            return u64::MAX;
        }
        let scaled = (self.numer() << 64u32) / self.denom();
        scaled.to_u64().unwrap_or(u64::MAX)
    }
}

macro_rules! impl_weight_float {
    ($t:ty) => {
        impl Weight for $t {
            fn from_ratio(p: i64, q: i64) -> Self {
                assert!(q != 0, "zero denominator");
                p as $t / q as $t
            }

            fn is_unit_total(&self) -> bool {
                (self - 1.0).abs() <= 1e-9
            }

            fn fraction_parts(&self) -> (String, String) {
                // Floats are dyadic rationals, so the exact form exists.
                match BigRational::from_float(*self) {
                    Some(r) => (r.numer().to_string(), r.denom().to_string()),
                    None => (self.to_string(), "1".to_string()),
                }
            }

            fn to_f64_lossy(&self) -> f64 {
                *self as f64
            }

            fn sample_threshold(&self) -> u64 {
                let v = (*self as f64).clamp(0.0, 1.0);
                let scaled = v * 2f64.powi(64);
                if scaled >= u64::MAX as f64 {
                    u64::MAX
                } else {
                    scaled as u64
                }
            }
        }
    };
}

impl_weight_float!(f64);
impl_weight_float!(f32);

/// Larger of two weights, treating incomparable pairs as keeping the left.
pub fn max_w<W: Weight>(a: W, b: W) -> W {
    if b > a {
        b
    } else {
        a
    }
}

/// Sum of a weight iterator.
pub fn sum_w<W: Weight>(iter: impl IntoIterator<Item = W>) -> W {
    iter.into_iter().fold(W::zero(), |acc, w| acc + w)
}
