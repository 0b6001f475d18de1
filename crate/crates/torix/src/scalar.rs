//! Floating-point scalar abstraction.
//!
//! The combinatorial core of the library works over exact integers and
//! rationals.  Everything that lives on the real side — log-heights, window
//! geometry, Monte Carlo integration, density estimates — is generic over a
//! [`Real`] scalar so the same code runs at `f32` or `f64` precision.  The
//! crate root exports `f64` aliases, which is what the CLI uses.

use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar used for heights, windows and integrals.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Send
    + Sync
    + Debug
    + Display
    + 'static
{
    /// Lossy conversion from `f64`, used when exact integer data enters the
    /// floating world (e.g. `ln` of a big-integer monomial value).
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Real")
    }
    /// Conversion to `f64` for reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
