//! Scalar abstraction shared by every numerical module.
//!
//! All geometry, kernels, quadrature and solvers are written against [`Real`],
//! which is implemented for `f32` and `f64`. Complex quantities are
//! [`num_complex::Complex<T>`].

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating point type usable by the solver (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal.
    #[inline(always)]
    fn lit(x: f64) -> Self {
        // Both implementors accept any finite f64 (f32 rounds).
        Self::from_f64(x).unwrap()
    }

    /// Converts a count or index.
    #[inline(always)]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).unwrap()
    }

    #[inline(always)]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`].
pub type C<T> = Complex<T>;

/// Shorthand for the imaginary unit.
#[inline(always)]
pub fn imag_unit<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::one())
}

#[inline(always)]
pub fn cplx<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline(always)]
pub fn real<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

/// `exp(i z)` for complex `z`, computed without forming `i z` explicitly.
#[inline(always)]
pub fn expi<T: Real>(z: C<T>) -> C<T> {
    let mag = (-z.im).exp();
    let (s, c) = z.re.sin_cos();
    Complex::new(mag * c, mag * s)
}

/// Principal square root with the branch flipped so that `Im >= 0`.
pub fn sqrt_upper<T: Real>(z: C<T>) -> C<T> {
    let s = z.sqrt();
    if s.im < T::zero() {
        -s
    } else {
        s
    }
}
