use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point element type of every matrix in the crate: `f32` or `f64`.
///
/// Accumulation, PPMI marginals and the Lanczos recurrences always run in
/// `f64`; the scalar type only fixes what is stored and handed back.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Lossy for `f32`, exact for `f64`.
    fn of(x: f64) -> Self;

    fn f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn of(x: f64) -> Self {
        x
    }

    #[inline]
    fn f64(self) -> f64 {
        self
    }
}

/// Formats a value with 17 significant digits, enough to round-trip any `f64`
/// (and therefore any `f32`) through text.
pub fn format_exact<T: Scalar>(x: T) -> String {
    format!("{:.16e}", x.f64())
}
