//! Real scalar abstraction shared by the numeric core.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floating-point type the linear algebra and algebra-closure code is generic over.
///
/// Implemented for `f32` and `f64`. Tolerances throughout the crate are written as
/// `f64` literals and converted with [`Real::tol`], which floors them at the
/// resolution the type can actually deliver.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + NumAssign
    + Sum
    + 'static
{
    /// Smallest tolerance that is meaningful for this type.
    const TOL_FLOOR: f64;

    /// Off-diagonal convergence threshold for the Jacobi eigensolver.
    const JACOBI_TOL: f64;

    /// Draw from N(0, 1).
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Converts an `f64` constant into this type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// A validity tolerance, floored at [`Real::TOL_FLOOR`].
    #[inline]
    fn tol(x: f64) -> Self {
        Self::lit(x.max(Self::TOL_FLOOR))
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite real")
    }
}

impl Real for f64 {
    const TOL_FLOOR: f64 = 0.0;
    const JACOBI_TOL: f64 = 1e-12;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Real for f32 {
    const TOL_FLOOR: f64 = 1e-4;
    const JACOBI_TOL: f64 = 1e-6;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}
