//! Uniform 1D grids and the semi-discrete operators.
//!
//! Dirichlet data never appears as an unknown: each operator is stored as
//! an interior matrix `a0` (homogeneous data) together with a linear map
//! taking the tuple of boundary values to the stencil inhomogeneity `g`,
//! so that the semi-discrete right-hand side is `a0 * u + g`.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Scalar};
use num_complex::Complex64;

use crate::field::Field;
use crate::{Error, Result};

/// Orientation sign of the advection generator: the operator built by
/// [`advection_operator`] discretises `sigma * d/dx (a(x) u)` with
/// `sigma = -1`, i.e. transport in the `+x` direction with inflow at
/// `x = 0`. This is the unique orientation that is well posed with a
/// Dirichlet datum at the left endpoint and stable under the left-biased
/// upwind stencil. The same sign enters the boundary evaluation of
/// `A f(u)` in the correction module.
pub const ADVECTION_ORIENTATION: f64 = -1.0;

/// Which endpoints of `[0, 1]` carry Dirichlet data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstrainedSides {
    /// Both endpoints constrained (diffusion, dispersion).
    Both,
    /// Only the left (inflow) endpoint constrained; the right endpoint is
    /// an unknown node (advection).
    LeftOnly,
}

/// Uniform mesh on `[0, 1]` holding only the unknown nodes.
#[derive(Clone, Debug)]
pub struct Grid1D {
    n: usize,
    h: f64,
    nodes: Vec<f64>,
    sides: ConstrainedSides,
}

/// Build a uniform grid with `n` unknown nodes.
///
/// Two-sided: unknowns at `x_i = i*h`, `i = 1..=n`, `h = 1/(n+1)`.
/// Left-constrained: unknowns at `x_i = i*h`, `i = 1..=n`, `h = 1/n`
/// (the outflow endpoint `x = 1` is an unknown).
pub fn build_grid(n: usize, sides: ConstrainedSides) -> Result<Grid1D> {
    if n < 4 {
        return Err(Error::InvalidGrid(format!(
            "need at least 4 unknown nodes, got {n}"
        )));
    }
    let intervals = match sides {
        ConstrainedSides::Both => n + 1,
        ConstrainedSides::LeftOnly => n,
    };
    let h = 1.0 / intervals as f64;
    let nodes = (1..=n).map(|i| i as f64 * h).collect();
    Ok(Grid1D { n, h, nodes, sides })
}

impl Grid1D {
    /// Number of unknown nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Mesh spacing.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Positions of the unknown nodes, in increasing order.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn sides(&self) -> ConstrainedSides {
        self.sides
    }

    pub fn is_two_sided(&self) -> bool {
        self.sides == ConstrainedSides::Both
    }
}

/// Advection coefficient `a(x)` with its analytic derivative.
#[derive(Clone)]
pub struct Coefficient {
    pub name: String,
    pub eval: fn(f64) -> f64,
    pub deriv: fn(f64) -> f64,
}

impl Coefficient {
    pub fn new(name: &str, eval: fn(f64) -> f64, deriv: fn(f64) -> f64) -> Self {
        Coefficient {
            name: name.to_string(),
            eval,
            deriv,
        }
    }

    /// Constant coefficient `a(x) = 1` (plain transport).
    pub fn one() -> Self {
        Coefficient::new("one", |_| 1.0, |_| 0.0)
    }
}

/// Operator family of a problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Diffusion,
    Advection,
    Dispersion,
}

/// Coefficient data the boundary corrections need from an advection operator.
#[derive(Clone, Copy, Debug)]
pub struct AdvectionData {
    /// `a(0)` at the inflow endpoint.
    pub a_at_inflow: f64,
    /// `a'(0)` at the inflow endpoint.
    pub da_at_inflow: f64,
}

/// Semi-discretisation of the linear operator `A` on the unknown nodes.
///
/// `a0` carries homogeneous Dirichlet data; the boundary map columns fold
/// the actual boundary values into the inhomogeneity, so applying the
/// operator to a state `u` with boundary values `(b_l, b_r)` reads
/// `a0 * u + b_l * col_l + b_r * col_r`.
#[derive(Clone)]
pub struct DiscreteOperator<S: Field> {
    kind: OperatorKind,
    grid: Grid1D,
    a0: Array2<S>,
    // sparse triplet view of a0 for O(n) application
    triplets: Vec<(usize, usize, S)>,
    col_left: Array1<S>,
    col_right: Array1<S>,
    /// Coefficient of the second-derivative part (`1` for diffusion, `i`
    /// for dispersion); used by the third-order corrections.
    curvature: S,
    advection: Option<AdvectionData>,
}

impl<S: Field> DiscreteOperator<S> {
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    /// Dense interior matrix (discretisation of `A` with homogeneous data).
    pub fn a0(&self) -> &Array2<S> {
        &self.a0
    }

    pub fn curvature_coeff(&self) -> S {
        self.curvature
    }

    pub fn advection_data(&self) -> Option<AdvectionData> {
        self.advection
    }

    /// Inhomogeneity produced by the boundary values `(b_l, b_r)`.
    /// `b_r` is ignored for one-sided operators.
    pub fn boundary_inhomogeneity(&self, b_left: S, b_right: S) -> Array1<S> {
        let mut g = self.col_left.mapv(|c| c * b_left);
        if self.grid.is_two_sided() {
            g.zip_mut_with(&self.col_right, |gi, c| *gi = *gi + *c * b_right);
        }
        g
    }

    /// `a0 * u` through the sparse stencil (O(n)).
    pub fn apply_a0(&self, u: &Array1<S>) -> Array1<S> {
        let mut out = Array1::zeros(self.n());
        self.apply_a0_into(u, &mut out);
        out
    }

    /// In-place variant of [`Self::apply_a0`]; overwrites `out`.
    pub fn apply_a0_into(&self, u: &Array1<S>, out: &mut Array1<S>) {
        debug_assert_eq!(u.len(), self.n());
        debug_assert_eq!(out.len(), self.n());
        out.fill(S::zero());
        for &(i, j, v) in &self.triplets {
            out[i] = out[i] + v * u[j];
        }
    }

    /// Largest real part over the spectrum of `a0` (dense eigenvalue
    /// computation; intended for setup validation and tests).
    pub fn spectral_abscissa(&self) -> Result<f64> {
        let vals = self.eigenvalues()?;
        Ok(vals.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
    }

    /// Eigenvalues of `a0` (dense solver).
    pub fn eigenvalues(&self) -> Result<Array1<Complex64>> {
        let (vals, _) = self.a0.eig()?;
        let out = vals
            .iter()
            .map(|z| Complex64::new((*z).re(), (*z).im()))
            .collect();
        Ok(out)
    }
}

/// `a0 * values + g(boundary_values)`.
pub fn apply_affine<S: Field>(
    op: &DiscreteOperator<S>,
    values: &Array1<S>,
    boundary_values: (S, S),
) -> Result<Array1<S>> {
    if values.len() != op.n() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} entries, operator acts on {}",
            values.len(),
            op.n()
        )));
    }
    let mut out = op.apply_a0(values);
    let g = op.boundary_inhomogeneity(boundary_values.0, boundary_values.1);
    out.zip_mut_with(&g, |o, gi| *o = *o + *gi);
    Ok(out)
}

fn triplets_of<S: Field>(a0: &Array2<S>) -> Vec<(usize, usize, S)> {
    let mut t = Vec::new();
    for ((i, j), &v) in a0.indexed_iter() {
        if v.abs() != 0.0 {
            t.push((i, j, v));
        }
    }
    t
}

/// Standard centered second-difference operator `d^2/dx^2` on a two-sided grid.
pub fn diffusion_operator(grid: &Grid1D) -> Result<DiscreteOperator<f64>> {
    let (a0, col_left, col_right) = laplacian_parts(grid, 1.0)?;
    let triplets = triplets_of(&a0);
    Ok(DiscreteOperator {
        kind: OperatorKind::Diffusion,
        grid: grid.clone(),
        a0,
        triplets,
        col_left,
        col_right,
        curvature: 1.0,
        advection: None,
    })
}

/// Dispersion operator `i * d^2/dx^2` on a two-sided grid (complex field).
pub fn dispersion_operator(grid: &Grid1D) -> Result<DiscreteOperator<Complex64>> {
    let (re_a0, re_l, re_r) = laplacian_parts(grid, 1.0)?;
    let unit = Complex64::new(0.0, 1.0);
    let a0 = re_a0.mapv(|v| unit * v);
    let col_left = re_l.mapv(|v| unit * v);
    let col_right = re_r.mapv(|v| unit * v);
    let triplets = triplets_of(&a0);
    Ok(DiscreteOperator {
        kind: OperatorKind::Dispersion,
        grid: grid.clone(),
        a0,
        triplets,
        col_left,
        col_right,
        curvature: unit,
        advection: None,
    })
}

fn laplacian_parts(grid: &Grid1D, scale: f64) -> Result<(Array2<f64>, Array1<f64>, Array1<f64>)> {
    if !grid.is_two_sided() {
        return Err(Error::InvalidGrid(
            "second-order operator requires a two-sided grid".into(),
        ));
    }
    let n = grid.n();
    let w = scale / (grid.h() * grid.h());
    let mut a0 = Array2::zeros((n, n));
    for i in 0..n {
        a0[[i, i]] = -2.0 * w;
        if i > 0 {
            a0[[i, i - 1]] = w;
        }
        if i + 1 < n {
            a0[[i, i + 1]] = w;
        }
    }
    let mut col_left = Array1::zeros(n);
    let mut col_right = Array1::zeros(n);
    col_left[0] = w;
    col_right[n - 1] = w;
    Ok((a0, col_left, col_right))
}

/// Conservation-form transport operator `sigma * d/dx (a(x) u)` with
/// `sigma = -1` (see [`ADVECTION_ORIENTATION`]) on a left-constrained grid,
/// discretised with the second-order upwind stencil biased toward the
/// inflow endpoint. Rows 1 and 2 use the boundary value; row 1 falls back
/// to the two-point upwind difference since it lacks a second left
/// neighbour.
pub fn advection_operator(grid: &Grid1D, coeff: &Coefficient) -> Result<DiscreteOperator<f64>> {
    if grid.is_two_sided() {
        return Err(Error::InvalidGrid(
            "advection operator requires a left-constrained grid".into(),
        ));
    }
    let n = grid.n();
    let h = grid.h();
    let sigma = ADVECTION_ORIENTATION;

    // samples of a at the boundary node x_0 = 0 and the unknown nodes
    let a_bnd = (coeff.eval)(0.0);
    let a: Vec<f64> = grid.nodes().iter().map(|&x| (coeff.eval)(x)).collect();
    if a_bnd <= 0.0 || a.iter().any(|&v| v <= 0.0) {
        return Err(Error::UnsupportedCoefficient(format!(
            "coefficient '{}' must be positive on [0, 1]",
            coeff.name
        )));
    }

    let mut a0 = Array2::zeros((n, n));
    let mut col_left = Array1::zeros(n);

    // row 0 (node x_1): first-order two-point upwind with the boundary value
    a0[[0, 0]] = sigma * a[0] / h;
    col_left[0] = -sigma * a_bnd / h;

    // row 1 (node x_2): full stencil, boundary value in place of w_0
    a0[[1, 1]] = sigma * 3.0 * a[1] / (2.0 * h);
    a0[[1, 0]] = -sigma * 4.0 * a[0] / (2.0 * h);
    col_left[1] = sigma * a_bnd / (2.0 * h);

    for i in 2..n {
        a0[[i, i]] = sigma * 3.0 * a[i] / (2.0 * h);
        a0[[i, i - 1]] = -sigma * 4.0 * a[i - 1] / (2.0 * h);
        a0[[i, i - 2]] = sigma * a[i - 2] / (2.0 * h);
    }

    let triplets = triplets_of(&a0);
    Ok(DiscreteOperator {
        kind: OperatorKind::Advection,
        grid: grid.clone(),
        a0,
        triplets,
        col_left,
        col_right: Array1::zeros(n),
        curvature: 1.0,
        advection: Some(AdvectionData {
            a_at_inflow: a_bnd,
            da_at_inflow: (coeff.deriv)(0.0),
        }),
    })
}

/// Solution values at the unknown nodes together with the current time.
#[derive(Clone, Debug)]
pub struct StateVector<S: Field> {
    pub values: Array1<S>,
    pub time: f64,
}

impl<S: Field> StateVector<S> {
    pub fn new(values: Array1<S>, time: f64) -> Self {
        StateVector { values, time }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::dist_max;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_small_grids() {
        assert!(matches!(
            build_grid(3, ConstrainedSides::Both),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn two_sided_grid_convention() {
        let g = build_grid(4, ConstrainedSides::Both).unwrap();
        assert_abs_diff_eq!(g.h(), 0.2, epsilon = 1e-15);
        let expect = [0.2, 0.4, 0.6, 0.8];
        for (x, e) in g.nodes().iter().zip(expect) {
            assert_abs_diff_eq!(*x, e, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(g.h() * 5.0, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn left_constrained_grid_convention() {
        let g = build_grid(4, ConstrainedSides::LeftOnly).unwrap();
        assert_abs_diff_eq!(g.h(), 0.25, epsilon = 1e-15);
        let expect = [0.25, 0.5, 0.75, 1.0];
        for (x, e) in g.nodes().iter().zip(expect) {
            assert_abs_diff_eq!(*x, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn diffusion_stencil_entries() {
        let g = build_grid(4, ConstrainedSides::Both).unwrap();
        let op = diffusion_operator(&g).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(op.a0()[[i, i]], -50.0, epsilon = 1e-12);
        }
        let gvec = op.boundary_inhomogeneity(1.0, 0.0);
        assert_abs_diff_eq!(gvec[0], 25.0, epsilon = 1e-12);
        for i in 1..4 {
            assert_abs_diff_eq!(gvec[i], 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn diffusion_eigenvalues_match_closed_form() {
        let g = build_grid(12, ConstrainedSides::Both).unwrap();
        let op = diffusion_operator(&g).unwrap();
        let h = g.h();
        let mut expect: Vec<f64> = (1..=12)
            .map(|k| {
                let s = (k as f64 * std::f64::consts::PI * h / 2.0).sin();
                -4.0 / (h * h) * s * s
            })
            .collect();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut got: Vec<f64> = op.eigenvalues().unwrap().iter().map(|z| z.re).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (e, v) in expect.iter().zip(got.iter()) {
            assert_abs_diff_eq!(e, v, epsilon = 1e-10);
        }
    }

    #[test]
    fn dispersion_is_scaled_laplacian_with_imaginary_spectrum() {
        let g = build_grid(16, ConstrainedSides::Both).unwrap();
        let op = dispersion_operator(&g).unwrap();
        let h = g.h();
        let d = op.a0()[[3, 3]];
        assert_abs_diff_eq!(d.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.im, -2.0 / (h * h), epsilon = 1e-9);
        for z in op.eigenvalues().unwrap().iter() {
            assert!(z.re.abs() <= 1e-10 * (1.0 / (h * h)));
        }
    }

    #[test]
    fn dispersion_consistent_on_sine() {
        // i * d2/dx2 sin(pi x) = -i pi^2 sin(pi x); boundary values vanish
        let pi = std::f64::consts::PI;
        let mut errs = Vec::new();
        for n in [40, 80, 160] {
            let g = build_grid(n, ConstrainedSides::Both).unwrap();
            let op = dispersion_operator(&g).unwrap();
            let u: Array1<Complex64> = g
                .nodes()
                .iter()
                .map(|&x| Complex64::new((pi * x).sin(), 0.0))
                .collect();
            let got = apply_affine(&op, &u, (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)))
                .unwrap();
            let expect: Array1<Complex64> = g
                .nodes()
                .iter()
                .map(|&x| Complex64::new(0.0, -pi * pi * (pi * x).sin()))
                .collect();
            errs.push(dist_max(&got, &expect));
        }
        let s1 = (errs[0] / errs[1]).log2();
        let s2 = (errs[1] / errs[2]).log2();
        assert!(s1 >= 1.9 && s2 >= 1.9, "slopes {s1} {s2}");
    }

    #[test]
    fn advection_exact_on_constant_flux() {
        let g = build_grid(20, ConstrainedSides::LeftOnly).unwrap();
        let op = advection_operator(&g, &Coefficient::one()).unwrap();
        let c = 3.25;
        let u = Array1::from_elem(20, c);
        let out = apply_affine(&op, &u, (c, 0.0)).unwrap();
        for v in out.iter() {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn advection_derivative_of_linear() {
        let g = build_grid(50, ConstrainedSides::LeftOnly).unwrap();
        let op = advection_operator(&g, &Coefficient::one()).unwrap();
        let u: Array1<f64> = g.nodes().iter().copied().collect();
        let out = apply_affine(&op, &u, (0.0, 0.0)).unwrap();
        // sigma * d/dx (x) = -1, exact for the linear flux
        for v in out.iter() {
            assert_abs_diff_eq!(*v, -1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn advection_rejects_nonpositive_coefficient() {
        let g = build_grid(8, ConstrainedSides::LeftOnly).unwrap();
        let bad = Coefficient::new("bad", |x| 0.5 - x, |_| -1.0);
        assert!(matches!(
            advection_operator(&g, &bad),
            Err(Error::UnsupportedCoefficient(_))
        ));
    }

    #[test]
    fn apply_affine_zero_is_zero_and_boundary_folds() {
        let g = build_grid(4, ConstrainedSides::Both).unwrap();
        let op = diffusion_operator(&g).unwrap();
        let z = Array1::zeros(4);
        let out = apply_affine(&op, &z, (0.0, 0.0)).unwrap();
        assert_eq!(out.iter().filter(|v| **v != 0.0).count(), 0);
        let out = apply_affine(&op, &z, (1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(out[0], 25.0, epsilon = 1e-12);
    }

    #[test]
    fn apply_affine_dimension_mismatch() {
        let g = build_grid(4, ConstrainedSides::Both).unwrap();
        let op = diffusion_operator(&g).unwrap();
        let u = Array1::zeros(5);
        assert!(matches!(
            apply_affine(&op, &u, (0.0, 0.0)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn diffusion_consistency_slope() {
        let pi = std::f64::consts::PI;
        // manufactured u(x) = sin(pi x), matching boundary values 0
        let mut errs = Vec::new();
        for n in [40, 80, 160] {
            let g = build_grid(n, ConstrainedSides::Both).unwrap();
            let op = diffusion_operator(&g).unwrap();
            let u: Array1<f64> = g.nodes().iter().map(|&x| (pi * x).sin()).collect();
            let got = apply_affine(&op, &u, (0.0, 0.0)).unwrap();
            let expect: Array1<f64> = g
                .nodes()
                .iter()
                .map(|&x| -pi * pi * (pi * x).sin())
                .collect();
            errs.push(dist_max(&got, &expect));
        }
        assert!((errs[0] / errs[1]).log2() >= 1.9);
        assert!((errs[1] / errs[2]).log2() >= 1.9);
    }

    #[test]
    fn advection_consistency_slope_away_from_closure() {
        // a(x) = 1 + sin x, u(x) = cos(2x) + 2; error measured from row 2 on
        let coeff = Coefficient::new("a1", |x| 1.0 + x.sin(), |x| x.cos());
        let mut errs = Vec::new();
        for n in [50, 100, 200] {
            let g = build_grid(n, ConstrainedSides::LeftOnly).unwrap();
            let op = advection_operator(&g, &coeff).unwrap();
            let f = |x: f64| (2.0 * x).cos() + 2.0;
            let u: Array1<f64> = g.nodes().iter().map(|&x| f(x)).collect();
            let got = apply_affine(&op, &u, (f(0.0), 0.0)).unwrap();
            // sigma * (a u)' = -(a' u + a u')
            let expect: Array1<f64> = g
                .nodes()
                .iter()
                .map(|&x| -(x.cos() * f(x) + (1.0 + x.sin()) * (-2.0 * (2.0 * x).sin())))
                .collect();
            let err = got
                .iter()
                .zip(expect.iter())
                .skip(2)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            errs.push(err);
        }
        assert!((errs[0] / errs[1]).log2() >= 1.9);
        assert!((errs[1] / errs[2]).log2() >= 1.9);
    }

    #[test]
    fn advection_spectrum_stays_stable() {
        let coeff = Coefficient::new("a1", |x| 1.0 + x.sin(), |x| x.cos());
        let g = build_grid(100, ConstrainedSides::LeftOnly).unwrap();
        let op = advection_operator(&g, &coeff).unwrap();
        let bound = 1e-8 / g.h();
        assert!(op.spectral_abscissa().unwrap() <= bound);
    }
}
