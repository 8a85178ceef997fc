//! Boundary corrections for the split subflows.
//!
//! Both families enforce compatibility between the reaction and the
//! Dirichlet data at the constrained endpoints:
//!
//! - CEC moves an interior profile `q` with `q = f(b)` on the boundary
//!   (and, at third order, `Aq = Af(u)` there) from the reaction subflow
//!   into the linear subflow;
//! - TDBC replaces the Dirichlet datum of the linear subflow by a
//!   polynomial-in-time boundary value matching the Taylor expansion of
//!   the exact flow at the boundary.
//!
//! The third-order variants need `Af(u)` on the boundary. For the
//! divergence-form transport operator this is available from boundary data
//! alone; for the second-order operators it requires the one-sided
//! gradient estimate of the current state.

use ndarray::Array1;

use crate::field::Field;
use crate::grid::{OperatorKind, ADVECTION_ORIENTATION};
use crate::stepper::SplitProblem;
use crate::{Error, Result};

/// Local order of a corrected scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrectionOrder {
    Second,
    Third,
}

/// Boundary values and reaction data at one constrained endpoint.
#[derive(Clone, Copy, Debug)]
pub struct EndpointData<S: Field> {
    /// Endpoint coordinate (0 or 1).
    pub x: f64,
    /// Dirichlet value.
    pub b: S,
    /// `f(b)` at this endpoint.
    pub fb: S,
    /// `f'(b)`.
    pub fpb: S,
    /// `f''(b)`.
    pub fppb: S,
}

/// Per-endpoint boundary data; `right` is absent for one-sided problems.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryData<S: Field> {
    pub left: EndpointData<S>,
    pub right: Option<EndpointData<S>>,
}

/// A scalar per constrained endpoint.
#[derive(Clone, Copy, Debug)]
pub struct EndpointValues<S> {
    pub left: S,
    pub right: Option<S>,
}

fn check_finite<S: Field>(e: &EndpointData<S>) -> Result<()> {
    for v in [e.fb, e.fpb, e.fppb] {
        if !v.abs().is_finite() {
            return Err(Error::Domain(format!(
                "reaction derivatives undefined at boundary value (x = {})",
                e.x
            )));
        }
    }
    Ok(())
}

/// One-sided second-order gradient estimate at the left endpoint.
fn gradient_left<S: Field>(b: S, u: &Array1<S>, h: f64) -> S {
    (b.mul_real(-3.0) + u[0].mul_real(4.0) - u[1]).div_real(2.0 * h)
}

/// Mirrored estimate at the right endpoint.
fn gradient_right<S: Field>(b: S, u: &Array1<S>, h: f64) -> S {
    let n = u.len();
    (b.mul_real(3.0) - u[n - 1].mul_real(4.0) + u[n - 2]).div_real(2.0 * h)
}

/// `A f(u)` restricted to the constrained endpoints.
///
/// Transport (divergence form, orientation sign of the generator):
/// `Af|G = -f'(b) f(b) + sigma * a'(0) (f(b) - f'(b) b)`, boundary data only.
/// Diffusion (`c = 1`) and dispersion (`c = i`):
/// `Af|G = c f''(b) (du/dx|G)^2 - f'(b) f(b)` with the one-sided gradient
/// estimate from `state`.
pub fn boundary_af<S: Field>(
    problem: &SplitProblem<S>,
    state: &Array1<S>,
) -> Result<EndpointValues<S>> {
    let bd = problem.boundary_data()?;
    let op = &problem.op;
    match op.kind() {
        OperatorKind::Advection => {
            let adv = op.advection_data().expect("advection operator carries coefficient data");
            let e = bd.left;
            let af = -(e.fpb * e.fb)
                + (e.fb - e.fpb * e.b).mul_real(ADVECTION_ORIENTATION * adv.da_at_inflow);
            Ok(EndpointValues {
                left: af,
                right: None,
            })
        }
        OperatorKind::Diffusion | OperatorKind::Dispersion => {
            let c = op.curvature_coeff();
            let h = op.grid().h();
            let e = bd.left;
            let g = gradient_left(e.b, state, h);
            let left = c * e.fppb * g * g - e.fpb * e.fb;
            let right = bd.right.map(|e| {
                let g = gradient_right(e.b, state, h);
                c * e.fppb * g * g - e.fpb * e.fb
            });
            Ok(EndpointValues { left, right })
        }
    }
}

/// Enforced endpoint values of a CEC correction.
#[derive(Clone, Copy, Debug)]
pub struct CecTargets<S> {
    /// `q` at the endpoint (equals `f(b)` there).
    pub q_value: S,
    /// `Aq` at the endpoint (third order only).
    pub aq_value: Option<S>,
}

/// Interior correction for the CEC scheme.
#[derive(Clone, Debug)]
pub struct CecCorrection<S: Field> {
    /// `q` sampled at the unknown nodes.
    pub q: Array1<S>,
    pub order: CorrectionOrder,
    /// Monomial coefficients of the interior profile (lowest degree first).
    pub poly: Vec<S>,
    pub target_left: CecTargets<S>,
    pub target_right: Option<CecTargets<S>>,
}

fn eval_poly<S: Field>(coeffs: &[S], x: f64) -> S {
    let mut acc = S::zero();
    for &c in coeffs.iter().rev() {
        acc = acc.mul_real(x) + c;
    }
    acc
}

/// Build the CEC correction of the requested order.
///
/// Second order interpolates `f(b)` linearly between the constrained
/// endpoints (decaying to zero at the outflow end for one-sided problems).
/// Third order uses the lowest-degree polynomial that additionally matches
/// `Aq = Af(u)` at the constrained endpoints.
pub fn build_cec_q<S: Field>(
    problem: &SplitProblem<S>,
    order: CorrectionOrder,
    state: &Array1<S>,
) -> Result<CecCorrection<S>> {
    let bd = problem.boundary_data()?;
    let op = &problem.op;
    let two_sided = op.grid().is_two_sided();

    let poly: Vec<S>;
    let target_left;
    let mut target_right = None;

    match (order, two_sided) {
        (CorrectionOrder::Second, true) => {
            let (fl, fr) = (bd.left.fb, bd.right.unwrap().fb);
            // f(b_l) (1 - x) + f(b_r) x
            poly = vec![fl, fr - fl];
            target_left = CecTargets {
                q_value: fl,
                aq_value: None,
            };
            target_right = Some(CecTargets {
                q_value: fr,
                aq_value: None,
            });
        }
        (CorrectionOrder::Second, false) => {
            let fl = bd.left.fb;
            // f(b) (1 - x), anchored to zero at the outflow end
            poly = vec![fl, -fl];
            target_left = CecTargets {
                q_value: fl,
                aq_value: None,
            };
        }
        (CorrectionOrder::Third, true) => {
            let af = boundary_af(problem, state)?;
            let c = op.curvature_coeff();
            let (fl, fr) = (bd.left.fb, bd.right.unwrap().fb);
            let (afl, afr) = (af.left, af.right.unwrap());
            // cubic with q(0) = f(b_l), q(1) = f(b_r), c q''(0) = Af|_0,
            // c q''(1) = Af|_1
            let tl = afl / c;
            let tr = afr / c;
            let a0 = fl;
            let a2 = tl.div_real(2.0);
            let a3 = (tr - tl).div_real(6.0);
            let a1 = fr - a0 - a2 - a3;
            poly = vec![a0, a1, a2, a3];
            target_left = CecTargets {
                q_value: fl,
                aq_value: Some(afl),
            };
            target_right = Some(CecTargets {
                q_value: fr,
                aq_value: Some(afr),
            });
        }
        (CorrectionOrder::Third, false) => {
            let af = boundary_af(problem, state)?;
            let adv = op.advection_data().expect("one-sided corrections need an advection operator");
            let fl = bd.left.fb;
            // quadratic with q(0) = f(b), Aq(0) = Af|_0, q(1) = 0; the
            // first-order condition fixes q'(0) through the divergence form
            // sigma (a' q + a q')|_0 = af  =>  q'(0) = (sigma af - a' q(0)) / a
            let b0 = fl;
            let b1 = (af.left.mul_real(ADVECTION_ORIENTATION) - b0.mul_real(adv.da_at_inflow))
                .div_real(adv.a_at_inflow);
            let b2 = -b0 - b1;
            poly = vec![b0, b1, b2];
            target_left = CecTargets {
                q_value: fl,
                aq_value: Some(af.left),
            };
        }
    }

    let q: Array1<S> = op
        .grid()
        .nodes()
        .iter()
        .map(|&x| eval_poly(&poly, x))
        .collect();
    Ok(CecCorrection {
        q,
        order,
        poly,
        target_left,
        target_right,
    })
}

/// Time polynomial `V(s) = c0 + c1 s + c2 s^2` imposed as the boundary
/// datum of the linear subflow on one endpoint, valid for `s` in `[0, tau]`.
#[derive(Clone, Copy, Debug)]
pub struct TdbcEndpoint<S: Field> {
    pub b: S,
    pub fb: S,
    /// `Af(u0)` at the endpoint (zero at second order).
    pub af: S,
    /// Constant third-order term `(tau^2/8) f'(b) f(b)` (zero at second order).
    pub quad: S,
    pub tau: f64,
}

impl<S: Field> TdbcEndpoint<S> {
    /// Coefficients `(c0, c1, c2)` of the polynomial in `s`.
    pub fn coefficients(&self) -> [S; 3] {
        [
            self.b + self.fb.mul_real(self.tau / 2.0) + self.quad,
            -self.fb + self.af.mul_real(self.tau / 2.0),
            self.af.mul_real(-0.5),
        ]
    }

    /// Evaluate the polynomial; the grouping keeps the midpoint identity
    /// `V(tau/2) = b` exact at second order.
    pub fn eval(&self, s: f64) -> S {
        self.b
            + self.fb.mul_real(self.tau / 2.0 - s)
            + self.quad
            + self.af.mul_real(s * (self.tau - s) / 2.0)
    }
}

/// Boundary polynomials per constrained endpoint.
#[derive(Clone, Copy, Debug)]
pub struct TdbcBoundary<S: Field> {
    pub left: TdbcEndpoint<S>,
    pub right: Option<TdbcEndpoint<S>>,
    pub order: CorrectionOrder,
}

impl<S: Field> TdbcBoundary<S> {
    /// `k`-th polynomial coefficient as a boundary-value pair.
    pub fn coeff_pair(&self, k: usize) -> (S, S) {
        let l = self.left.coefficients()[k];
        let r = self.right.map_or(S::zero(), |e| e.coefficients()[k]);
        (l, r)
    }
}

/// Build the TDBC boundary polynomial of the requested order for one step
/// of length `tau`; `state` is the numerical solution at the beginning of
/// the step (used only for the gradient entering `Af(u)` at third order on
/// the second-order operators).
pub fn tdbc_boundary<S: Field>(
    problem: &SplitProblem<S>,
    order: CorrectionOrder,
    tau: f64,
    state: &Array1<S>,
) -> Result<TdbcBoundary<S>> {
    if tau <= 0.0 {
        return Err(Error::Domain(format!("tdbc needs tau > 0, got {tau}")));
    }
    let bd = problem.boundary_data()?;
    let af = match order {
        CorrectionOrder::Second => EndpointValues {
            left: S::zero(),
            right: bd.right.map(|_| S::zero()),
        },
        CorrectionOrder::Third => boundary_af(problem, state)?,
    };
    let quad = |e: &EndpointData<S>| match order {
        CorrectionOrder::Second => S::zero(),
        CorrectionOrder::Third => (e.fpb * e.fb).mul_real(tau * tau / 8.0),
    };
    let left = TdbcEndpoint {
        b: bd.left.b,
        fb: bd.left.fb,
        af: af.left,
        quad: quad(&bd.left),
        tau,
    };
    let right = bd.right.map(|e| TdbcEndpoint {
        b: e.b,
        fb: e.fb,
        af: af.right.unwrap(),
        quad: quad(&e),
        tau,
    });
    Ok(TdbcBoundary { left, right, order })
}

/// Validate endpoint data (finite reaction values).
pub fn validate_boundary_data<S: Field>(bd: &BoundaryData<S>) -> Result<()> {
    check_finite(&bd.left)?;
    if let Some(r) = &bd.right {
        check_finite(r)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{advection_operator, build_grid, diffusion_operator, Coefficient, ConstrainedSides};
    use crate::reaction::Reaction;
    use crate::stepper::SplitProblem;
    use approx::assert_abs_diff_eq;
    use ndarray::Array1;
    use ndarray_linalg::Scalar;

    fn diffusion_problem(n: usize, b: f64, reaction: Reaction) -> SplitProblem<f64> {
        let g = build_grid(n, ConstrainedSides::Both).unwrap();
        let op = diffusion_operator(&g).unwrap();
        let u0: Array1<f64> = g
            .nodes()
            .iter()
            .map(|&x| 1.0 + (std::f64::consts::PI * x).sin())
            .collect();
        SplitProblem::new(op, reaction, b, b, u0).unwrap()
    }

    fn advection_problem(n: usize, b: f64, reaction: Reaction) -> SplitProblem<f64> {
        let g = build_grid(n, ConstrainedSides::LeftOnly).unwrap();
        let coeff = Coefficient::new("a1", |x| 1.0 + x.sin(), |x| x.cos());
        let op = advection_operator(&g, &coeff).unwrap();
        let u0: Array1<f64> = g.nodes().iter().map(|&x| 1.0 + x).collect();
        SplitProblem::new(op, reaction, b, 0.0, u0).unwrap()
    }

    #[test]
    fn advection_af_is_orientation_independent_when_coefficient_term_vanishes() {
        // f = exp(u-1), b = 1: f(b) = f'(b) = 1, so f(b) - f'(b) b = 0
        let p = advection_problem(16, 1.0, Reaction::ExpUm1);
        let af = boundary_af(&p, &p.u0).unwrap();
        assert_abs_diff_eq!(af.left, -1.0, epsilon = 1e-14);
        assert!(af.right.is_none());
    }

    #[test]
    fn diffusion_af_with_flat_state() {
        // constant state: gradient term vanishes, Af = -f'(b) f(b) = -1
        let g = build_grid(16, ConstrainedSides::Both).unwrap();
        let op = diffusion_operator(&g).unwrap();
        let u0 = Array1::from_elem(16, 1.0);
        let p = SplitProblem::new(op, Reaction::ExpUm1, 1.0, 1.0, u0).unwrap();
        let af = boundary_af(&p, &p.u0).unwrap();
        assert_abs_diff_eq!(af.left, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(af.right.unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn gradient_stencil_second_order() {
        // u = 1 + sin(pi x): du/dx(0) = pi
        let pi = std::f64::consts::PI;
        let mut errs = Vec::new();
        for n in [40, 80, 160] {
            let g = build_grid(n, ConstrainedSides::Both).unwrap();
            let u: Array1<f64> = g.nodes().iter().map(|&x| 1.0 + (pi * x).sin()).collect();
            let est = gradient_left(1.0, &u, g.h());
            errs.push((est - pi).abs());
        }
        assert!((errs[0] / errs[1]).log2() >= 1.9);
        assert!((errs[1] / errs[2]).log2() >= 1.9);
    }

    #[test]
    fn cec2_constant_when_endpoint_values_agree() {
        let p = diffusion_problem(12, 1.0, Reaction::ExpUm1);
        let cec = build_cec_q(&p, CorrectionOrder::Second, &p.u0).unwrap();
        for v in cec.q.iter() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-15);
        }
        // interpolation conditions hold exactly
        assert_eq!(cec.target_left.q_value, 1.0);
        assert_eq!(eval_poly(&cec.poly, 0.0), 1.0);
        assert_eq!(eval_poly(&cec.poly, 1.0), 1.0);
    }

    #[test]
    fn cec3_cubic_matches_curvature_targets() {
        let p = diffusion_problem(24, 1.0, Reaction::ExpUm1);
        let cec = build_cec_q(&p, CorrectionOrder::Third, &p.u0).unwrap();
        assert_eq!(cec.poly.len(), 4);
        // analytic second derivative of the cubic at the endpoints
        let d2_at0 = 2.0 * cec.poly[2];
        let d2_at1 = 2.0 * cec.poly[2] + 6.0 * cec.poly[3];
        let tl = cec.target_left.aq_value.unwrap();
        let tr = cec.target_right.unwrap().aq_value.unwrap();
        assert_abs_diff_eq!(d2_at0, tl, epsilon = 1e-13 * tl.abs().max(1.0));
        assert_abs_diff_eq!(d2_at1, tr, epsilon = 1e-13 * tr.abs().max(1.0));
        // endpoint values
        assert_abs_diff_eq!(eval_poly(&cec.poly, 0.0), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eval_poly(&cec.poly, 1.0), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn cec3_advection_first_order_condition() {
        let p = advection_problem(24, 1.0, Reaction::ExpUm1);
        let cec = build_cec_q(&p, CorrectionOrder::Third, &p.u0).unwrap();
        let adv = p.op.advection_data().unwrap();
        // Aq(0) = sigma (a'(0) q(0) + a(0) q'(0))
        let aq = ADVECTION_ORIENTATION * (adv.da_at_inflow * cec.poly[0] + adv.a_at_inflow * cec.poly[1]);
        let target = cec.target_left.aq_value.unwrap();
        assert_abs_diff_eq!(aq, target, epsilon = 1e-13);
        // decay at the outflow end
        assert_abs_diff_eq!(eval_poly(&cec.poly, 1.0), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn tdbc2_values() {
        let p = diffusion_problem(12, 1.0, Reaction::ExpUm1);
        let tau = 0.02;
        let tb = tdbc_boundary(&p, CorrectionOrder::Second, tau, &p.u0).unwrap();
        // b = 1, f(b) = 1
        assert_abs_diff_eq!(tb.left.eval(0.0), 1.01, epsilon = 1e-15);
        assert_abs_diff_eq!(tb.left.eval(tau), 0.99, epsilon = 1e-15);
        assert_eq!(tb.left.eval(tau / 2.0), 1.0);
    }

    #[test]
    fn tdbc3_coefficients() {
        // b = 1, f(b) = 1, f'(b) = 1, Af_0 = -1, tau = 0.1
        let e = TdbcEndpoint {
            b: 1.0,
            fb: 1.0,
            af: -1.0,
            quad: 1.0 * 1.0 * (0.1 * 0.1 / 8.0),
            tau: 0.1,
        };
        let [c0, c1, c2] = e.coefficients();
        assert_abs_diff_eq!(c0, 1.05125, epsilon = 1e-15);
        assert_abs_diff_eq!(c1, -1.05, epsilon = 1e-15);
        assert_abs_diff_eq!(c2, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn tdbc3_reduces_to_tdbc2_when_af_vanishes() {
        let e3 = TdbcEndpoint {
            b: 2.0,
            fb: 0.5,
            af: 0.0,
            quad: 0.25 * 0.5 * (0.04 * 0.04 / 8.0),
            tau: 0.04,
        };
        let e2 = TdbcEndpoint {
            b: 2.0,
            fb: 0.5,
            af: 0.0,
            quad: 0.0,
            tau: 0.04,
        };
        let [c0_3, c1_3, c2_3] = e3.coefficients();
        let [c0_2, c1_2, c2_2] = e2.coefficients();
        assert_abs_diff_eq!(c0_3, c0_2 + e3.quad, epsilon = 1e-16);
        assert_eq!(c1_3, c1_2);
        assert_eq!(c2_3, c2_2);
        assert_eq!(c2_3, 0.0);
    }

    #[test]
    fn tdbc_consistency_with_taylor_truncation() {
        let p = diffusion_problem(12, 1.0, Reaction::ExpUm1);
        let tau = 0.05;
        let bd = p.boundary_data().unwrap();
        // order 2: V(0) = b + (tau/2) f(b)
        let tb = tdbc_boundary(&p, CorrectionOrder::Second, tau, &p.u0).unwrap();
        let truncated1 = bd.left.b + bd.left.fb.mul_real(tau / 2.0);
        assert_eq!(tb.left.eval(0.0), truncated1);
        // order 3: V(0) = b + (tau/2) f(b) + (tau^2/8) f'(b) f(b)
        let tb = tdbc_boundary(&p, CorrectionOrder::Third, tau, &p.u0).unwrap();
        let truncated2 =
            bd.left.b + bd.left.fb.mul_real(tau / 2.0) + (bd.left.fpb * bd.left.fb).mul_real(tau * tau / 8.0);
        assert_eq!(tb.left.eval(0.0), truncated2);
    }
}
