//! Scalar abstraction for the learner and functional layer.
//!
//! The regret machinery (Hedge, swap learners, the loss/regret functionals,
//! the sawtooth query families) is written against [`Scalar`] so the math is
//! precision-agnostic. The shipped mechanisms, games, and file formats pin
//! `f64` through the [`Real`] alias; an `f32` instantiation is kept compiling
//! and tested to catch accidental precision assumptions.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::Float;

/// Concrete scalar used by mechanisms, games, and artifacts.
pub type Real = f64;

/// Floating-point scalar bound for the generic math layer.
pub trait Scalar: Float + Sum + Debug + Display + Send + Sync + 'static {
    /// Lossy conversion from a configuration-level `f64`.
    fn from_f64(v: f64) -> Self;

    /// Widen back to `f64` for reporting.
    fn into_f64(self) -> f64;

    /// Baseline comparison tolerance for this precision.
    ///
    /// `1e-9` at `f64` (the tolerance the contracts are stated at), scaled up
    /// to something meaningful at `f32`.
    fn base_tolerance() -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }

    #[inline]
    fn into_f64(self) -> f64 {
        self
    }

    #[inline]
    fn base_tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn into_f64(self) -> f64 {
        f64::from(self)
    }

    #[inline]
    fn base_tolerance() -> Self {
        1e-5
    }
}
