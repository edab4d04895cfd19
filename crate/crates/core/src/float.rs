//! Scalar abstraction used throughout the crate.
//!
//! All numerical routines are generic over [`Float`], which bundles the
//! `num-traits` capabilities they rely on. `f64` is the intended production
//! scalar (the crate-root aliases use it); `f32` is supported for callers
//! that can live with the reduced precision.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable by every algorithm in this crate.
pub trait Float:
    num_traits::Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn cast(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant must convert to scalar type")
    }

    /// Converts a count into this scalar type.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("usize must convert to scalar type")
    }

    /// Lossy view as `f64`, used for reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar must convert to f64")
    }
}

impl Float for f32 {}
impl Float for f64 {}
