use std::fmt::{Debug, Display};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the network and clustering math is generic over.
///
/// Implemented for `f32` and `f64`. Losses are always accumulated through
/// [`Real::to_f64_lossy`] when reported, so the training loop behaves the same
/// for both widths apart from rounding.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + LinalgScalar
    + ScalarOperand
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    fn from_f64_lossy(value: f64) -> Self {
        Self::from_f64(value).expect("f64 converts to every supported float")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("supported floats convert to f64")
    }

    fn from_usize_lossy(value: usize) -> Self {
        Self::from_usize(value).expect("usize converts to every supported float")
    }
}

impl Real for f32 {}
impl Real for f64 {}
