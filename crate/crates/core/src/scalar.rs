//! Scalar abstraction shared by the numeric routines.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used by kernels, entropies and threshold searches.
///
/// Implemented for `f32` and `f64`. Sampling always happens in `f64`; the
/// scalar only governs the deterministic arithmetic.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for literal constants.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Default validation tolerance: 1e-12 for `f64`, scaled up for `f32`.
    fn validation_tol() -> Self {
        let eps = Self::epsilon().as_f64();
        Self::lit((eps * 1e4).max(1e-12))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `x ln x` with the `0 ln 0 = 0` convention.
pub(crate) fn xlnx<T: Scalar>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else {
        x * x.ln()
    }
}
