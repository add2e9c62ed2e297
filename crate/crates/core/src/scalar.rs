//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All math is written against [`Real`], which `f32` and `f64` satisfy. The
//! simulator instantiates it with `f64`; see the aliases in the crate root.

use nalgebra::{Complex, DVector, RealField};
use num_traits::{FloatConst, ToPrimitive};

/// Real scalar usable by the tracking and optimization code.
pub trait Real: RealField + Copy + FloatConst + ToPrimitive + Default {}

impl<T> Real for T where T: RealField + Copy + FloatConst + ToPrimitive + Default {}

/// Complex scalar over `T`.
pub type Cplx<T> = Complex<T>;

/// Complex column vector (steering vectors, beams, matched-filter outputs).
pub type CVector<T> = DVector<Complex<T>>;

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

/// `x` as `f64`, for reporting.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `e^{jθ}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Squared modulus of a complex number.
#[inline]
pub fn abs2<T: Real>(z: Complex<T>) -> T {
    z.re * z.re + z.im * z.im
}

/// Modulus of a complex number.
#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    abs2(z).sqrt()
}

/// Complex number with zero imaginary part.
#[inline]
pub fn real<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// `aᴴ b`.
#[inline]
pub fn inner<T: Real>(a: &CVector<T>, b: &CVector<T>) -> Complex<T> {
    a.iter()
        .zip(b.iter())
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

/// Squared Euclidean norm of a complex vector.
#[inline]
pub fn norm2<T: Real>(v: &CVector<T>) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + abs2(*z))
}
