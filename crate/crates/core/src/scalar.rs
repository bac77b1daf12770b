//! Scalar abstraction: the whole library is generic over the floating-point
//! type through [`Real`], with `f64` aliases exported at the crate root.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the solvers operate on: `f32` or `f64`.
///
/// `f64` is the intended production type; the default tolerances assume it.
/// `f32` works for smoke tests with correspondingly loose tolerances.
pub trait Real: Float + FromPrimitive + Debug + Display + LowerExp + 'static {
    /// Lift an `f64` constant into `Self`.
    #[inline]
    fn cst(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }

    /// Lift a `usize` into `Self`.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_lift_into_both_widths() {
        assert_eq!(<f64 as Real>::cst(0.5), 0.5);
        assert_eq!(<f32 as Real>::cst(0.5), 0.5f32);
        assert_eq!(<f64 as Real>::of_usize(7), 7.0);
    }
}
