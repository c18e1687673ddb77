use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating-point type used for probabilities, frequencies and moments.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Convert an `f64` literal. Infallible for the float types implemented here.
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 converts to every float type")
    }

    fn of_count(n: u64) -> Self {
        <Self as FromPrimitive>::from_u64(n).expect("u64 converts to every float type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
