//! Floating-point scalar abstraction shared by the network, the analytical
//! filter and the metrics.
//!
//! Model rates and clock readings are always `f64`; everything downstream of
//! them (beliefs, generator matrices, network parameters) is generic over
//! [`Scalar`] so the same code runs in `f32` for speed or `f64` for checks.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance on `|sum(p) - 1|` for a vector to count as a belief.
    const NORMALIZATION_TOL: f64;
    /// Poisson tail mass at which a uniformization series is truncated.
    const SERIES_TAIL_TOL: f64;

    fn of(x: f64) -> Self;

    fn to_f64_lossy(self) -> f64;

    /// `c <- alpha * a * b + beta * c` for strided row/column layouts.
    ///
    /// # Safety
    /// All pointers must be valid for the index ranges implied by the
    /// dimensions and strides. Prefer [`crate::linalg::gemm`].
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );
}

impl Scalar for f64 {
    const NORMALIZATION_TOL: f64 = 1e-9;
    const SERIES_TAIL_TOL: f64 = 1e-12;

    #[inline]
    fn of(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

impl Scalar for f32 {
    const NORMALIZATION_TOL: f64 = 1e-5;
    const SERIES_TAIL_TOL: f64 = 1e-7;

    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}
