//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All solvers are written against [`Scalar`] so that they run unchanged on
//! `f64` (the default everywhere) and `f32`. Tolerances scale with the
//! precision of the type.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type usable by the schedulers, simulators and LP solver.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumCast
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Absolute tolerance on remaining ideal-condition work when deciding
    /// that a job has completed.
    fn completion_tol() -> Self;

    /// Smallest pivot magnitude accepted by the simplex solver.
    fn pivot_tol() -> Self;

    /// Tolerance for integrality of binary variables in imported solutions.
    fn integrality_tol() -> Self;

    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn hundred() -> Self {
        Self::lit(100.0)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn completion_tol() -> Self {
        1e-9
    }
    fn pivot_tol() -> Self {
        1e-12
    }
    fn integrality_tol() -> Self {
        1e-6
    }
}

impl Scalar for f32 {
    fn completion_tol() -> Self {
        1e-4
    }
    fn pivot_tol() -> Self {
        1e-6
    }
    fn integrality_tol() -> Self {
        1e-4
    }
}

/// `|a - b| <= tol * max(1, |a|, |b|)`
pub fn approx_eq<S: Scalar>(a: S, b: S, tol: S) -> bool {
    let scale = S::one().max(a.abs()).max(b.abs());
    (a - b).abs() <= tol * scale
}
