use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar the quantum and BCHSH layers are generic over.
///
/// The tolerances scale with the precision of the type: the `f64` values are the
/// ones used throughout the crate's documentation and tests, `f32` uses looser
/// floors so the same invariants remain checkable.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Tolerance for algebraic identities: unit norm, idempotence, traces, completeness.
    fn identity_tol() -> Self;

    /// Lowest eigenvalue accepted for a density matrix.
    fn psd_floor() -> Self;

    /// Probability below which a branch is treated as impossible.
    fn zero_branch() -> Self;

    /// Converts an `f64` literal. Panics only for values outside the range of `Self`.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn identity_tol() -> Self {
        1e-12
    }
    fn psd_floor() -> Self {
        1e-10
    }
    fn zero_branch() -> Self {
        1e-14
    }
}

impl Real for f32 {
    fn identity_tol() -> Self {
        1e-5
    }
    fn psd_floor() -> Self {
        1e-5
    }
    fn zero_branch() -> Self {
        1e-7
    }
}

/// Clamps a computed probability into `[0, 1]` to absorb roundoff.
pub(crate) fn clamp_unit<T: Real>(p: T) -> T {
    p.max(T::zero()).min(T::one())
}

/// Validates that `p` is a probability. Values within the identity tolerance of the
/// interval are snapped onto it.
pub(crate) fn check_probability<T: Real>(p: T, what: &str) -> crate::Result<T> {
    let tol = T::identity_tol();
    if !p.is_finite() || p < -tol || p > T::one() + tol {
        return Err(crate::Error::InvalidInput(format!("{what} must lie in [0, 1], got {p}")));
    }
    Ok(clamp_unit(p))
}
