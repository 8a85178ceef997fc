//! Scalar field abstraction: every solver component is generic over the
//! real (`f64`) or complex (`Complex64`) field of the discrete operator.

use ndarray::{Array1, Array2, LinalgScalar};
use ndarray_linalg::{Lapack, Scalar};

/// Scalar field of a problem: `f64` for diffusion/advection, `Complex64`
/// for dispersion. Bundles the elementary-function surface of
/// [`ndarray_linalg::Scalar`] with the LAPACK bindings used for matrix
/// exponentials and eigenvalue checks.
pub trait Field: Scalar<Real = f64> + Lapack + LinalgScalar + 'static {
    const IS_COMPLEX: bool;
}

impl Field for f64 {
    const IS_COMPLEX: bool = false;
}

impl Field for num_complex::Complex64 {
    const IS_COMPLEX: bool = true;
}

/// Maximum modulus of the entries.
pub fn norm_max<S: Field>(v: &Array1<S>) -> f64 {
    v.iter().map(|z| z.abs()).fold(0.0, f64::max)
}

/// Maximum-norm distance between two vectors of equal length.
pub fn dist_max<S: Field>(u: &Array1<S>, v: &Array1<S>) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter()
        .zip(v.iter())
        .map(|(a, b)| (*a - *b).abs())
        .fold(0.0, f64::max)
}

/// Operator 1-norm (maximum absolute column sum).
pub fn norm_1<S: Field>(m: &Array2<S>) -> f64 {
    let mut best = 0.0f64;
    for col in m.columns() {
        let s: f64 = col.iter().map(|z| z.abs()).sum();
        best = best.max(s);
    }
    best
}

/// True if every entry is finite.
pub fn all_finite<S: Field>(m: &Array2<S>) -> bool {
    m.iter().all(|z| z.re().is_finite() && z.im().is_finite())
}
