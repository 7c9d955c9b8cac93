//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! The math is written once against [`Real`] and instantiated for `f32` and
//! `f64`. Random variates are part of the trait because `rand_distr` only
//! provides its samplers for the concrete float types.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Open01, StandardNormal};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    fn lit(x: f64) -> Self;

    /// Converts a count into this scalar type.
    fn count(n: u64) -> Self {
        Self::lit(n as f64)
    }

    fn as_f64(self) -> f64;

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform on the open interval (0, 1).
    fn sample_open01<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Unit-scale gamma variate; `None` when `shape` is not a valid shape.
    fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, shape: Self) -> Option<Self>;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            #[inline]
            fn sample_open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
                Open01.sample(rng)
            }

            #[inline]
            fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, shape: Self) -> Option<Self> {
                Gamma::new(shape, 1.0).ok().map(|g| g.sample(rng))
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);
