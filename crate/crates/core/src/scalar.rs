//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar type the linear algebra and Bell evaluation are generic over.
///
/// Implemented for `f32` and `f64`. Random sampling always draws `f64`
/// variates and narrows them, so a given stream produces the same
/// experiment at either precision.
pub trait Real:
    Float
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
    /// Lossy conversion from an `f64` literal or variate.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Real type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real values convert to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
