//! Dense matrix exponentials and `phi_k` matrix functions.
//!
//! The linear subflow of every scheme has a source that is polynomial in
//! time of degree at most two, so its exact solution only needs
//! `exp(t A0)` and `phi_1 .. phi_3` of `t A0`:
//!
//! `w(t) = exp(tA0) w0 + t phi_1(tA0) g0 + t^2 phi_2(tA0) g1 + 2 t^3 phi_3(tA0) g2`.
//!
//! The family is obtained from a single exponential of the block matrix
//! that augments `t A0` with a nilpotent identity chain; column block `k`
//! of the result is `phi_k(t A0)`.

use ndarray::{s, Array1, Array2};
use ndarray_linalg::{Factorize, Solve};

use crate::field::{all_finite, norm_1, Field};
use crate::{Error, Result};

// Pade coefficient tables and 1-norm thresholds from the scaling-and-squaring
// method with degree-13 core.
const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA3: f64 = 1.495585217958292e-2;
const THETA5: f64 = 2.539398330063230e-1;
const THETA7: f64 = 9.504178996162932e-1;
const THETA9: f64 = 2.097847961257068;
const THETA13: f64 = 5.371920351148152;

fn scaled_eye<S: Field>(n: usize, c: f64) -> Array2<S> {
    Array2::eye(n).mapv(|v: S| v.mul_real(c))
}

fn pade_uv<S: Field>(a: &Array2<S>, coeffs: &[f64]) -> (Array2<S>, Array2<S>) {
    let n = a.nrows();
    let a2 = a.dot(a);
    // even powers a^0, a^2, a^4, ...
    let mut powers: Vec<Array2<S>> = vec![Array2::eye(n)];
    let half = coeffs.len() / 2;
    for _ in 1..half {
        powers.push(powers.last().unwrap().dot(&a2));
    }
    let mut u_inner: Array2<S> = Array2::zeros((n, n));
    let mut v: Array2<S> = Array2::zeros((n, n));
    for (k, p) in powers.iter().enumerate() {
        u_inner = u_inner + p.mapv(|x| x.mul_real(coeffs[2 * k + 1]));
        v = v + p.mapv(|x| x.mul_real(coeffs[2 * k]));
    }
    (a.dot(&u_inner), v)
}

fn pade13_uv<S: Field>(a: &Array2<S>) -> (Array2<S>, Array2<S>) {
    let n = a.nrows();
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let w1 = a6.mapv(|x| x.mul_real(B13[13]))
        + a4.mapv(|x| x.mul_real(B13[11]))
        + a2.mapv(|x| x.mul_real(B13[9]));
    let w2 = a6.mapv(|x| x.mul_real(B13[7]))
        + a4.mapv(|x| x.mul_real(B13[5]))
        + a2.mapv(|x| x.mul_real(B13[3]))
        + scaled_eye::<S>(n, B13[1]);
    let u = a.dot(&(a6.dot(&w1) + w2));
    let z1 = a6.mapv(|x| x.mul_real(B13[12]))
        + a4.mapv(|x| x.mul_real(B13[10]))
        + a2.mapv(|x| x.mul_real(B13[8]));
    let v = a6.dot(&z1)
        + a6.mapv(|x| x.mul_real(B13[6]))
        + a4.mapv(|x| x.mul_real(B13[4]))
        + a2.mapv(|x| x.mul_real(B13[2]))
        + scaled_eye::<S>(n, B13[0]);
    (u, v)
}

/// Matrix exponential by scaling and squaring with a diagonal Pade core.
pub fn matrix_exponential<S: Field>(m: &Array2<S>) -> Result<Array2<S>> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !all_finite(m) {
        return Err(Error::NonFinite("matrix exponential input".into()));
    }
    let eta = norm_1(m);
    let (u, v, squarings) = if eta < THETA3 {
        let (u, v) = pade_uv(m, &B3);
        (u, v, 0)
    } else if eta < THETA5 {
        let (u, v) = pade_uv(m, &B5);
        (u, v, 0)
    } else if eta < THETA7 {
        let (u, v) = pade_uv(m, &B7);
        (u, v, 0)
    } else if eta < THETA9 {
        let (u, v) = pade_uv(m, &B9);
        (u, v, 0)
    } else {
        let s = ((eta / THETA13).log2().ceil() as i32).max(0);
        let scaled = m.mapv(|x| x.mul_real(2f64.powi(-s)));
        let (u, v) = pade13_uv(&scaled);
        (u, v, s)
    };

    // r = (V - U)^{-1} (V + U)
    let denom = &v - &u;
    let numer = &v + &u;
    let lu = denom.factorize()?;
    let n = m.nrows();
    let mut r: Array2<S> = Array2::zeros((n, n));
    for j in 0..n {
        let col = lu.solve(&numer.column(j).to_owned())?;
        r.column_mut(j).assign(&col);
    }
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    Ok(r)
}

/// `phi_0(tA0) .. phi_kmax(tA0)` for one step length `t`.
pub struct PhiFamily<S: Field> {
    t: f64,
    mats: Vec<Array2<S>>,
}

impl<S: Field> PhiFamily<S> {
    /// Step length the family was computed for.
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Largest available `k`.
    pub fn kmax(&self) -> usize {
        self.mats.len() - 1
    }

    /// `phi_k(tA0)` as a dense matrix.
    pub fn phi(&self, k: usize) -> &Array2<S> {
        &self.mats[k]
    }

    /// Exact solution at time `t` of `w' = A0 w + g(s)` from `w0`, where
    /// `g` is the polynomial source (absent means zero source).
    pub fn propagate(&self, w0: &Array1<S>, src: Option<&PolynomialSource<S>>) -> Array1<S> {
        let mut out = self.mats[0].dot(w0);
        if let Some(src) = src {
            assert!(
                src.coeffs.len() <= self.kmax(),
                "phi family of order {} cannot integrate a degree-{} source",
                self.kmax(),
                src.degree()
            );
            let mut factorial = 1.0;
            for (k, g) in src.coeffs.iter().enumerate() {
                if k > 0 {
                    factorial *= k as f64;
                }
                let scale = factorial * self.t.powi(k as i32 + 1);
                let term = self.mats[k + 1].dot(g);
                out.zip_mut_with(&term, |o, v| *o = *o + v.mul_real(scale));
            }
        }
        out
    }
}

/// Compute `phi_0 .. phi_kmax` of `t * a0` through one exponential of the
/// augmented block matrix `[[tA0, I, 0, ..], [0, 0, I, ..], ...]`.
pub fn phi_family<S: Field>(a0: &Array2<S>, t: f64, kmax: usize) -> Result<PhiFamily<S>> {
    if t <= 0.0 {
        return Err(Error::Domain(format!("phi family needs t > 0, got {t}")));
    }
    let n = a0.nrows();
    if n != a0.ncols() {
        return Err(Error::DimensionMismatch("phi family needs a square matrix".into()));
    }
    let ta = a0.mapv(|x| x.mul_real(t));
    if kmax == 0 {
        let e = matrix_exponential(&ta)?;
        return Ok(PhiFamily { t, mats: vec![e] });
    }
    let dim = (kmax + 1) * n;
    let mut aug: Array2<S> = Array2::zeros((dim, dim));
    aug.slice_mut(s![0..n, 0..n]).assign(&ta);
    for k in 0..kmax {
        let rows = k * n..(k + 1) * n;
        let cols = (k + 1) * n..(k + 2) * n;
        aug.slice_mut(s![rows, cols]).assign(&Array2::eye(n));
    }
    let e = matrix_exponential(&aug)?;
    let mats = (0..=kmax)
        .map(|k| e.slice(s![0..n, k * n..(k + 1) * n]).to_owned())
        .collect();
    Ok(PhiFamily { t, mats })
}

/// Source term `g(s) = g_0 + s g_1 + s^2 g_2` of the linear subflow.
#[derive(Clone, Debug)]
pub struct PolynomialSource<S: Field> {
    coeffs: Vec<Array1<S>>,
}

impl<S: Field> PolynomialSource<S> {
    /// Coefficients `g_0, g_1, ...` in increasing order of the time power;
    /// at most degree two.
    pub fn new(coeffs: Vec<Array1<S>>) -> Self {
        assert!(
            !coeffs.is_empty() && coeffs.len() <= 3,
            "polynomial source must have degree 0..=2"
        );
        PolynomialSource { coeffs }
    }

    pub fn constant(g0: Array1<S>) -> Self {
        Self::new(vec![g0])
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &Array1<S> {
        &self.coeffs[k]
    }

    /// Drop trailing zero coefficients (a degenerate quadratic integrates
    /// exactly like its lower-degree truncation, with fewer phi matrices).
    pub fn trimmed(mut self) -> Self {
        while self.coeffs.len() > 1
            && self.coeffs.last().unwrap().iter().all(|v| v.abs() == 0.0)
        {
            self.coeffs.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|g| g.iter().all(|v| v.abs() == 0.0))
    }
}

/// Exact solution at time `t` of `w'(s) = A0 w + g_0 + s g_1 + s^2 g_2`.
pub fn propagate_polynomial_source<S: Field>(
    a0: &Array2<S>,
    w0: &Array1<S>,
    t: f64,
    src: &PolynomialSource<S>,
) -> Result<Array1<S>> {
    let n = a0.nrows();
    if w0.len() != n || src.coeffs.iter().any(|g| g.len() != n) {
        return Err(Error::DimensionMismatch(
            "state/source length must match the operator dimension".into(),
        ));
    }
    let fam = phi_family(a0, t, src.coeffs.len())?;
    Ok(fam.propagate(w0, Some(src)))
}
