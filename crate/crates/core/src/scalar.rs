//! Scalar abstractions shared by the exact and floating-point pipelines.
//!
//! Every matrix routine in this crate is written against [`Scalar`]. Exact
//! algebra instantiates it with [`Rational`](crate::Rational); numerics use
//! `Complex<F>` for `F` in {`f32`, `f64`}.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, Zero};

/// A field element usable as a matrix entry.
pub trait Scalar:
    Clone + Debug + PartialEq + Num + Neg<Output = Self> + Send + Sync + 'static
{
    /// Ordered magnitude used for pivoting and defect norms.
    type Modulus: Clone + Debug + PartialOrd + Zero + Send + Sync;

    fn modulus(&self) -> Self::Modulus;

    /// Whether a pivot of size `pivot` in a matrix whose largest entry has
    /// size `scale` must be treated as zero.
    fn pivot_is_singular(pivot: &Self::Modulus, scale: &Self::Modulus) -> bool;

    fn from_i64(value: i64) -> Self;
}

/// Real floating-point type underlying the complex numerics.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    fn lit(value: f64) -> Self {
        <Self as FromPrimitive>::from_f64(value).expect("literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

impl Scalar for BigRational {
    type Modulus = BigRational;

    fn modulus(&self) -> BigRational {
        self.abs()
    }

    fn pivot_is_singular(pivot: &BigRational, _scale: &BigRational) -> bool {
        pivot.is_zero()
    }

    fn from_i64(value: i64) -> Self {
        BigRational::from_integer(BigInt::from(value))
    }
}

fn float_pivot_is_singular<F: Real>(pivot: F, scale: F) -> bool {
    let floor = scale * F::epsilon() * F::lit(8.0);
    !pivot.is_finite() || pivot <= floor || pivot.is_zero()
}

macro_rules! real_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            type Modulus = $t;

            fn modulus(&self) -> $t {
                self.abs()
            }

            fn pivot_is_singular(pivot: &$t, scale: &$t) -> bool {
                float_pivot_is_singular(*pivot, *scale)
            }

            fn from_i64(value: i64) -> Self {
                value as $t
            }
        }
    };
}

real_scalar!(f32);
real_scalar!(f64);

impl<F: Real> Scalar for Complex<F> {
    type Modulus = F;

    fn modulus(&self) -> F {
        self.norm()
    }

    fn pivot_is_singular(pivot: &F, scale: &F) -> bool {
        float_pivot_is_singular(*pivot, *scale)
    }

    fn from_i64(value: i64) -> Self {
        Complex::new(
            F::from_i64(value).expect("integer representable"),
            F::zero(),
        )
    }
}

/// Convenience: `Complex<F>` from a real literal.
pub fn c<F: Real>(re: f64, im: f64) -> Complex<F> {
    Complex::new(F::lit(re), F::lit(im))
}
