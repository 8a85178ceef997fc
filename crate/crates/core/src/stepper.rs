//! Strang composition of the split subflows and the time loop.
//!
//! One step of length `tau` is the half reaction flow, the exactly solved
//! linear subflow over `[0, tau]`, and the second half reaction flow. The
//! scheme decides what enters the two subflows:
//!
//! - `Unmodified`: reaction as given, linear subflow with the constant
//!   Dirichlet datum folded into a constant source;
//! - `Cec2`/`Cec3`: reaction shifted by `q`, linear subflow with the
//!   constant datum plus `q`;
//! - `Tdbc2`/`Tdbc3`: reaction as given, linear subflow with the
//!   time-polynomial boundary datum (an affine or quadratic source).

use std::rc::Rc;

use ndarray::Array1;

use crate::correction::{build_cec_q, tdbc_boundary, BoundaryData, CorrectionOrder, EndpointData};
use crate::field::Field;
use crate::grid::{DiscreteOperator, StateVector};
use crate::phi::{phi_family, PhiFamily, PolynomialSource};
use crate::reaction::{reaction_flow, Reaction, ShiftedReaction};
use crate::{Error, Result};

/// Tolerance of the step-count rule: a remainder below this is not worth a
/// shortened final step.
const REMAINDER_EPS: f64 = 1e-12;

/// Splitting scheme selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    Unmodified,
    Cec2,
    Cec3,
    Tdbc2,
    Tdbc3,
}

impl Scheme {
    pub fn by_name(name: &str) -> Result<Scheme> {
        Ok(match name {
            "unmodified" => Scheme::Unmodified,
            "cec2" => Scheme::Cec2,
            "cec3" => Scheme::Cec3,
            "tdbc2" => Scheme::Tdbc2,
            "tdbc3" => Scheme::Tdbc3,
            other => return Err(Error::Registry(format!("unknown scheme '{other}'"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Unmodified => "unmodified",
            Scheme::Cec2 => "cec2",
            Scheme::Cec3 => "cec3",
            Scheme::Tdbc2 => "tdbc2",
            Scheme::Tdbc3 => "tdbc3",
        }
    }

    pub fn all() -> [Scheme; 5] {
        [
            Scheme::Unmodified,
            Scheme::Cec2,
            Scheme::Cec3,
            Scheme::Tdbc2,
            Scheme::Tdbc3,
        ]
    }

    fn cec_order(self) -> Option<CorrectionOrder> {
        match self {
            Scheme::Cec2 => Some(CorrectionOrder::Second),
            Scheme::Cec3 => Some(CorrectionOrder::Third),
            _ => None,
        }
    }

    fn tdbc_order(self) -> Option<CorrectionOrder> {
        match self {
            Scheme::Tdbc2 => Some(CorrectionOrder::Second),
            Scheme::Tdbc3 => Some(CorrectionOrder::Third),
            _ => None,
        }
    }
}

/// A split problem instance: operator, reaction, Dirichlet data and the
/// discrete initial value.
pub struct SplitProblem<S: Field> {
    pub op: DiscreteOperator<S>,
    pub reaction: Reaction,
    pub b_left: f64,
    pub b_right: f64,
    pub u0: Array1<S>,
}

impl<S: Field> SplitProblem<S> {
    pub fn new(
        op: DiscreteOperator<S>,
        reaction: Reaction,
        b_left: f64,
        b_right: f64,
        u0: Array1<S>,
    ) -> Result<Self> {
        if u0.len() != op.n() {
            return Err(Error::DimensionMismatch(format!(
                "initial value has {} entries, operator acts on {}",
                u0.len(),
                op.n()
            )));
        }
        Ok(SplitProblem {
            op,
            reaction,
            b_left,
            b_right,
            u0,
        })
    }

    pub fn grid(&self) -> &crate::grid::Grid1D {
        self.op.grid()
    }

    pub fn xs(&self) -> &[f64] {
        self.op.grid().nodes()
    }

    pub fn initial_state(&self) -> StateVector<S> {
        StateVector::new(self.u0.clone(), 0.0)
    }

    /// Dirichlet values in the problem's scalar field.
    pub fn boundary_values(&self) -> (S, S) {
        (S::from_real(self.b_left), S::from_real(self.b_right))
    }

    /// Reaction data at the constrained endpoints.
    pub fn boundary_data(&self) -> Result<BoundaryData<S>> {
        let endpoint = |x: f64, b: f64| -> EndpointData<S> {
            let bv = S::from_real(b);
            EndpointData {
                x,
                b: bv,
                fb: self.reaction.f(bv, x),
                fpb: self.reaction.f_u(bv, x),
                fppb: self.reaction.f_uu(bv, x),
            }
        };
        let bd = BoundaryData {
            left: endpoint(0.0, self.b_left),
            right: self
                .grid()
                .is_two_sided()
                .then(|| endpoint(1.0, self.b_right)),
        };
        crate::correction::validate_boundary_data(&bd)?;
        Ok(bd)
    }

    /// Highest phi order a scheme needs on this problem.
    pub fn required_kmax(&self, scheme: Scheme) -> usize {
        match scheme {
            Scheme::Unmodified => {
                if self.b_left == 0.0 && (!self.grid().is_two_sided() || self.b_right == 0.0) {
                    0
                } else {
                    1
                }
            }
            Scheme::Cec2 | Scheme::Cec3 => 1,
            Scheme::Tdbc2 => 2,
            Scheme::Tdbc3 => 3,
        }
    }
}

/// Reaction shift and linear-subflow source for one step.
struct StepParts<S: Field> {
    shift: Option<Array1<S>>,
    source: Option<PolynomialSource<S>>,
}

fn step_parts<S: Field>(
    problem: &SplitProblem<S>,
    scheme: Scheme,
    state: &Array1<S>,
    tau: f64,
) -> Result<StepParts<S>> {
    let (bl, br) = problem.boundary_values();
    if let Some(order) = scheme.tdbc_order() {
        let tb = tdbc_boundary(problem, order, tau, state)?;
        let degree = match order {
            CorrectionOrder::Second => 1,
            CorrectionOrder::Third => 2,
        };
        let coeffs = (0..=degree)
            .map(|k| {
                let (l, r) = tb.coeff_pair(k);
                problem.op.boundary_inhomogeneity(l, r)
            })
            .collect();
        let src = PolynomialSource::new(coeffs).trimmed();
        return Ok(StepParts {
            shift: None,
            source: (!src.is_zero()).then_some(src),
        });
    }

    let mut g0 = problem.op.boundary_inhomogeneity(bl, br);
    let shift = if let Some(order) = scheme.cec_order() {
        let cec = build_cec_q(problem, order, state)?;
        g0.zip_mut_with(&cec.q, |g, q| *g = *g + *q);
        Some(cec.q)
    } else {
        None
    };
    let src = PolynomialSource::constant(g0);
    Ok(StepParts {
        shift,
        source: (!src.is_zero()).then_some(src),
    })
}

/// One Strang step of length `tau` using a precomputed phi family for the
/// same step length.
pub fn strang_step_with<S: Field>(
    problem: &SplitProblem<S>,
    scheme: Scheme,
    state: &StateVector<S>,
    tau: f64,
    phis: &PhiFamily<S>,
) -> Result<StateVector<S>> {
    if tau <= 0.0 {
        return Err(Error::Domain(format!("step length must be positive, got {tau}")));
    }
    if phis.t() != tau {
        return Err(Error::DimensionMismatch(format!(
            "phi family was computed for t = {}, step uses tau = {tau}",
            phis.t()
        )));
    }
    let parts = step_parts(problem, scheme, &state.values, tau)?;
    let sr = ShiftedReaction {
        base: problem.reaction,
        xs: problem.xs(),
        shift: parts.shift.as_ref(),
    };
    let half = reaction_flow(&state.values, tau / 2.0, &sr)?;
    let propagated = phis.propagate(&half, parts.source.as_ref());
    let full = reaction_flow(&propagated, tau / 2.0, &sr)?;
    Ok(StateVector::new(full, state.time + tau))
}

/// One Strang step of length `tau`; computes the phi family on the fly.
pub fn strang_step<S: Field>(
    problem: &SplitProblem<S>,
    scheme: Scheme,
    state: &StateVector<S>,
    tau: f64,
) -> Result<StateVector<S>> {
    let fam = phi_family(problem.op.a0(), tau, problem.required_kmax(scheme))?;
    strang_step_with(problem, scheme, state, tau, &fam)
}

/// Memoised phi families per step length. A cache belongs to one operator;
/// do not share it across problems.
#[derive(Default)]
pub struct PhiCache<S: Field> {
    entries: Vec<(f64, Rc<PhiFamily<S>>)>,
}

impl<S: Field> PhiCache<S> {
    pub fn new() -> Self {
        PhiCache {
            entries: Vec::new(),
        }
    }

    pub fn family(
        &mut self,
        op: &DiscreteOperator<S>,
        t: f64,
        kmax: usize,
    ) -> Result<Rc<PhiFamily<S>>> {
        if let Some((_, fam)) = self
            .entries
            .iter()
            .find(|(tt, fam)| *tt == t && fam.kmax() >= kmax)
        {
            return Ok(fam.clone());
        }
        let fam = Rc::new(phi_family(op.a0(), t, kmax)?);
        self.entries.push((t, fam.clone()));
        Ok(fam)
    }
}

/// Run the splitting from `t = 0` to exactly `t_final` with nominal step
/// `tau`: full steps while they fit, then one shortened final step for any
/// remainder above tolerance (with a freshly built phi family and
/// per-step corrections for that length).
pub fn integrate<S: Field>(
    problem: &SplitProblem<S>,
    scheme: Scheme,
    t_final: f64,
    tau: f64,
) -> Result<StateVector<S>> {
    let mut cache = PhiCache::new();
    integrate_with(problem, scheme, t_final, tau, &mut cache, None)
}

/// Like [`integrate`], recording the state after every step when `record`
/// is given (the initial state is pushed first).
pub fn integrate_with<S: Field>(
    problem: &SplitProblem<S>,
    scheme: Scheme,
    t_final: f64,
    tau: f64,
    cache: &mut PhiCache<S>,
    mut record: Option<&mut Vec<StateVector<S>>>,
) -> Result<StateVector<S>> {
    if t_final <= 0.0 || tau <= 0.0 {
        return Err(Error::Domain(format!(
            "integration needs positive horizon and step, got T = {t_final}, tau = {tau}"
        )));
    }
    let kmax = problem.required_kmax(scheme);
    let mut state = problem.initial_state();
    if let Some(rec) = record.as_deref_mut() {
        rec.push(state.clone());
    }

    let fam = cache.family(&problem.op, tau, kmax)?;
    let mut n_steps = 0u64;
    while state.time + tau <= t_final + REMAINDER_EPS {
        state = strang_step_with(problem, scheme, &state, tau, &fam)?;
        n_steps += 1;
        state.time = n_steps as f64 * tau;
        if let Some(rec) = record.as_deref_mut() {
            rec.push(state.clone());
        }
    }
    let remainder = t_final - state.time;
    if remainder > REMAINDER_EPS {
        let fam = cache.family(&problem.op, remainder, kmax)?;
        state = strang_step_with(problem, scheme, &state, remainder, &fam)?;
        state.time = t_final;
        if let Some(rec) = record.as_deref_mut() {
            rec.push(state.clone());
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::dist_max;
    use crate::grid::{
        advection_operator, build_grid, diffusion_operator, dispersion_operator, Coefficient,
        ConstrainedSides,
    };
    use crate::reference::{reference_solve, ReferenceConfig};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn diffusion_problem(
        n: usize,
        b: f64,
        reaction: Reaction,
        ic: impl Fn(f64) -> f64,
    ) -> SplitProblem<f64> {
        let g = build_grid(n, ConstrainedSides::Both).unwrap();
        let op = diffusion_operator(&g).unwrap();
        let u0: Array1<f64> = g.nodes().iter().map(|&x| ic(x)).collect();
        SplitProblem::new(op, reaction, b, b, u0).unwrap()
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::all() {
            assert_eq!(Scheme::by_name(s.name()).unwrap(), s);
        }
        assert!(Scheme::by_name("lie").is_err());
    }

    #[test]
    fn pure_linear_step_has_semigroup_property() {
        // f = 0: a step is the exact linear flow, so two half steps equal one
        let p = diffusion_problem(24, 0.5, Reaction::Zero, |x| x * (1.0 - x) + 0.5);
        let tau = 0.05;
        let s0 = p.initial_state();
        let one = strang_step(&p, Scheme::Unmodified, &s0, tau).unwrap();
        let half = strang_step(&p, Scheme::Unmodified, &s0, tau / 2.0).unwrap();
        let two = strang_step(&p, Scheme::Unmodified, &half, tau / 2.0).unwrap();
        assert!(dist_max(&one.values, &two.values) <= 1e-10);
    }

    #[test]
    fn homogeneous_linear_reaction_is_third_order_locally() {
        // b = 0 and f(0) = 0: no order reduction, local error O(tau^3)
        let pi = std::f64::consts::PI;
        let p = diffusion_problem(40, 0.0, Reaction::UPlusP, |x| (pi * x).sin());
        let cfg = ReferenceConfig::default();
        let mut errs = Vec::new();
        for tau in [4e-3, 2e-3] {
            let stepped = strang_step(&p, Scheme::Unmodified, &p.initial_state(), tau).unwrap();
            let wait = reference_solve(&p, tau, &cfg).unwrap();
            errs.push(dist_max(&stepped.values, &wait));
        }
        let slope = (errs[0] / errs[1]).log2();
        assert!(slope >= 2.9, "local slope {slope}");
    }

    #[test]
    fn step_count_rule() {
        let p = diffusion_problem(8, 0.0, Reaction::Zero, |x| x);
        let mut cache = PhiCache::new();
        let mut traj = Vec::new();
        let out = integrate_with(&p, Scheme::Unmodified, 0.25, 0.064, &mut cache, Some(&mut traj))
            .unwrap();
        // 3 full steps plus a shortened one of 0.058
        assert_eq!(traj.len(), 5);
        assert_abs_diff_eq!(traj[3].time, 0.192, epsilon = 1e-12);
        assert_abs_diff_eq!(out.time, 0.25, epsilon = 0.0);

        // integer multiple: no shortened step
        let mut traj = Vec::new();
        integrate_with(&p, Scheme::Unmodified, 0.256, 0.064, &mut cache, Some(&mut traj)).unwrap();
        assert_eq!(traj.len(), 5);
        assert_abs_diff_eq!(traj[4].time, 0.256, epsilon = 0.0);
    }

    #[test]
    fn boundary_neutral_schemes_coincide() {
        // f(u, x) = u + p(x) vanishes at both endpoints for b = 0, so the
        // corrections degenerate: q = 0 and V = b
        let pi = std::f64::consts::PI;
        let p = diffusion_problem(24, 0.0, Reaction::UPlusP, |x| (pi * x).sin());
        let tau = 0.01;
        let s0 = p.initial_state();
        let unmod = strang_step(&p, Scheme::Unmodified, &s0, tau).unwrap();
        let cec = strang_step(&p, Scheme::Cec2, &s0, tau).unwrap();
        let tdbc = strang_step(&p, Scheme::Tdbc2, &s0, tau).unwrap();
        assert!(dist_max(&unmod.values, &cec.values) <= 1e-12);
        assert!(dist_max(&unmod.values, &tdbc.values) <= 1e-12);
    }

    #[test]
    fn linear_exactness_all_operators() {
        let cfg = ReferenceConfig::default();

        // diffusion, inhomogeneous data
        let p = diffusion_problem(24, 1.0, Reaction::Zero, |x| 1.0 + x * (1.0 - x));
        let got = integrate(&p, Scheme::Unmodified, 0.1, 0.02).unwrap();
        let want = reference_solve(&p, 0.1, &cfg).unwrap();
        assert!(dist_max(&got.values, &want) <= 1e-9);

        // advection
        let g = build_grid(24, ConstrainedSides::LeftOnly).unwrap();
        let coeff = Coefficient::new("a1", |x| 1.0 + x.sin(), |x| x.cos());
        let op = advection_operator(&g, &coeff).unwrap();
        let u0: Array1<f64> = g.nodes().iter().map(|&x| 1.0 + x).collect();
        let p = SplitProblem::new(op, Reaction::Zero, 1.0, 0.0, u0).unwrap();
        let got = integrate(&p, Scheme::Unmodified, 0.1, 0.02).unwrap();
        let want = reference_solve(&p, 0.1, &cfg).unwrap();
        assert!(dist_max(&got.values, &want) <= 1e-9);

        // dispersion
        let g = build_grid(24, ConstrainedSides::Both).unwrap();
        let op = dispersion_operator(&g).unwrap();
        let pi = std::f64::consts::PI;
        let u0: Array1<Complex64> = g
            .nodes()
            .iter()
            .map(|&x| Complex64::new(1.0 + (pi * x).sin(), (2.0 * pi * x).sin()))
            .collect();
        let p = SplitProblem::new(op, Reaction::Zero, 1.0, 1.0, u0).unwrap();
        let got = integrate(&p, Scheme::Unmodified, 0.05, 0.01).unwrap();
        let want = reference_solve(&p, 0.05, &cfg).unwrap();
        assert!(dist_max(&got.values, &want) <= 1e-9);
    }

    #[test]
    fn determinism() {
        let p = diffusion_problem(16, 1.0, Reaction::ExpUm1, |x| {
            1.0 + (std::f64::consts::PI * x).sin()
        });
        let a = integrate(&p, Scheme::Tdbc3, 0.1, 0.016).unwrap();
        let b = integrate(&p, Scheme::Tdbc3, 0.1, 0.016).unwrap();
        assert_eq!(dist_max(&a.values, &b.values), 0.0);
    }

    #[test]
    fn table2_one_step_and_global_error_scale() {
        // diffusion, f = exp(u-1), b = 1, u0 = 1 + sin(pi x), tau = 1.6e-2:
        // one-step error near 1.25e-4 and global error at T = 0.25 near
        // 3.13e-5 for the second-order boundary polynomial scheme
        let pi = std::f64::consts::PI;
        let p = diffusion_problem(200, 1.0, Reaction::ExpUm1, |x| 1.0 + (pi * x).sin());
        let cfg = ReferenceConfig::default();
        let tau = 1.6e-2;

        let stepped = strang_step(&p, Scheme::Tdbc2, &p.initial_state(), tau).unwrap();
        let short_ref = reference_solve(&p, tau, &cfg).unwrap();
        let local = dist_max(&stepped.values, &short_ref);
        assert!(
            local >= 1.25e-4 / 3.0 && local <= 1.25e-4 * 3.0,
            "local error {local}"
        );

        let full = integrate(&p, Scheme::Tdbc2, 0.25, tau).unwrap();
        let full_ref = reference_solve(&p, 0.25, &cfg).unwrap();
        let global = dist_max(&full.values, &full_ref);
        assert!(
            global >= 3.13e-5 / 3.0 && global <= 3.13e-5 * 3.0,
            "global error {global}"
        );
    }
}
