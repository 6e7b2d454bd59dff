//! Scalar abstraction: training runs in f32, gradient checking in f64.

use core::fmt::{Debug, Display};
use core::iter::Sum;
use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating-point element type of tensors. Implemented for `f32` and `f64`.
pub trait Real:
    Float + NumAssignOps + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + 'static
{
    /// Lossy conversion from f64, used when feeding schedule values,
    /// RNG draws and constants into a tensor of either precision.
    fn from_f(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Real")
    }

    /// Widening (f32) or identity (f64) conversion for reductions and
    /// reporting.
    fn to_f(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("usize count fits in Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}
