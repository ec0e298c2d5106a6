//! Scalar abstraction shared by every numerical routine in the crate.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};
use rustfft::FftNum;
use std::fmt::{Debug, Display};

/// Real floating-point type the library is generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + FftNum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    /// Converts an integer into `Self`.
    fn int(n: i64) -> Self {
        Self::from_i64(n).expect("integer representable")
    }

    /// Lossy conversion to `f64` for reporting and serialization.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// A tolerance never finer than a small multiple of machine epsilon.
    fn tol(x: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(64.0);
        let t = Self::lit(x);
        if t > floor {
            t
        } else {
            floor
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type C<T> = Complex<T>;

/// `i` as a complex number.
pub fn imag_unit<T: Real>() -> C<T> {
    C::new(T::zero(), T::one())
}

/// `(i j)^k` for integer `j` and `k >= 0`.
pub fn ij_pow<T: Real>(j: i64, k: u32) -> C<T> {
    let mut out = C::new(T::one(), T::zero());
    let ij = C::new(T::zero(), T::int(j));
    for _ in 0..k {
        out = out * ij;
    }
    out
}
