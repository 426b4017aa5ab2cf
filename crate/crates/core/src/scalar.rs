//! Scalar abstraction shared by every model in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating point type the model can be evaluated in: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Converts a literal into the scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `|a - b| <= tol * max(|a|, |b|)`, with an absolute floor of `tol` near zero.
pub fn rel_close<T: Scalar>(a: T, b: T, tol: T) -> bool {
    let scale = a.abs().max(b.abs()).max(T::one());
    (a - b).abs() <= tol * scale
}
